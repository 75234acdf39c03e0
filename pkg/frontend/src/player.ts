// Pure playback model for the clip viewer: frame index, layer toggle,
// play/pause at nominal fps, and the side-by-side input-vs-gt mode. The
// DOM layer renders from this; missing frames are the view's concern
// (placeholder tile, playback keeps ticking).

import { Layer } from "./api.js";

const LAYER_ORDER: Layer[] = ["input", "mask", "gt"];

export class PlayerModel {
  index = 0;
  layer: Layer = "input";
  playing = false;
  sideBySide = false;

  constructor(
    public readonly frameCount: number,
    public readonly fps: number,
  ) {
    if (frameCount < 1) throw new Error("player needs at least one frame");
    if (fps <= 0) throw new Error("fps must be positive");
  }

  get intervalMs(): number {
    return 1000 / this.fps;
  }

  get lastFrame(): number {
    return this.frameCount - 1;
  }

  seek(index: number): void {
    this.index = Math.min(Math.max(Math.trunc(index), 0), this.lastFrame);
  }

  step(delta: number): void {
    this.seek(this.index + delta);
  }

  /** One playback tick: advance and wrap around at the end. */
  tick(): void {
    this.index = this.index >= this.lastFrame ? 0 : this.index + 1;
  }

  togglePlaying(): boolean {
    this.playing = !this.playing;
    return this.playing;
  }

  setLayer(layer: Layer): void {
    this.layer = layer;
  }

  cycleLayer(): Layer {
    const next =
      LAYER_ORDER[(LAYER_ORDER.indexOf(this.layer) + 1) % LAYER_ORDER.length];
    this.layer = next;
    return next;
  }

  toggleSideBySide(): boolean {
    this.sideBySide = !this.sideBySide;
    return this.sideBySide;
  }

  /** Layers to render: one panel normally, input|gt in side-by-side mode. */
  visibleLayers(): Layer[] {
    return this.sideBySide ? ["input", "gt"] : [this.layer];
  }
}
