// Clip-browser state: filters, the loaded card list, keyboard selection,
// and optimistic decision updates with rollback. All server mutation goes
// through ReviewApi; nothing here survives a refresh, by design (the
// service is the single source of truth).

import {
  ClipCard,
  ClipFilters,
  DecisionBody,
  ReviewApi,
  Status,
} from "./api.js";

export type StoreListener = () => void;

export const PAGE_SIZE = 24;

export class ClipStore {
  clips: ClipCard[] = [];
  frameCount = 0;
  filters: ClipFilters = {};
  selectedIndex = 0;
  loading = false;
  error: string | null = null;

  private listeners: StoreListener[] = [];

  constructor(
    private api: ReviewApi,
    public readonly pageSize = PAGE_SIZE,
  ) {}

  subscribe(fn: StoreListener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  get selected(): ClipCard | null {
    return this.clips[this.selectedIndex] ?? null;
  }

  // The grid is paged; the page always follows the keyboard selection.
  get page(): number {
    return Math.floor(this.selectedIndex / this.pageSize);
  }

  get pageCount(): number {
    return Math.max(1, Math.ceil(this.clips.length / this.pageSize));
  }

  /** Cards on the current page, with their absolute indices. */
  visible(): { card: ClipCard; index: number }[] {
    const start = this.page * this.pageSize;
    return this.clips
      .slice(start, start + this.pageSize)
      .map((card, i) => ({ card, index: start + i }));
  }

  turnPage(delta: number): void {
    if (this.clips.length === 0) return;
    const target = Math.min(Math.max(this.page + delta, 0), this.pageCount - 1);
    this.selectedIndex = Math.min(target * this.pageSize, this.clips.length - 1);
    this.emit();
  }

  async load(): Promise<void> {
    this.loading = true;
    this.error = null;
    this.emit();
    try {
      const resp = await this.api.listClips(this.filters);
      this.clips = resp.clips;
      this.frameCount = resp.frame_count;
      this.selectedIndex = Math.min(
        this.selectedIndex,
        Math.max(this.clips.length - 1, 0),
      );
    } catch (err) {
      this.error = err instanceof Error ? err.message : String(err);
    } finally {
      this.loading = false;
      this.emit();
    }
  }

  async setFilters(filters: ClipFilters): Promise<void> {
    this.filters = filters;
    this.selectedIndex = 0;
    await this.load();
  }

  moveSelection(delta: number): void {
    if (this.clips.length === 0) return;
    const next = this.selectedIndex + delta;
    this.selectedIndex = Math.min(Math.max(next, 0), this.clips.length - 1);
    this.emit();
  }

  /**
   * Optimistically flips the card's status, then posts. On any failure the
   * previous status is restored and the error re-thrown for the view.
   */
  async applyDecision(clipId: string, body: DecisionBody): Promise<void> {
    const card = this.clips.find((c) => c.clip_id === clipId);
    if (!card) throw new Error(`unknown clip in store: ${clipId}`);
    const previous: Status = card.status;
    card.status = body.verdict;
    this.emit();
    try {
      const updated = await this.api.postDecision(clipId, body);
      card.status = updated.status;
    } catch (err) {
      card.status = previous;
      throw err;
    } finally {
      this.emit();
    }
  }
}
