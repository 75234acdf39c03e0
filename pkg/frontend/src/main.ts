// DOM wiring: filter bar, card grid with keyboard navigation, the clip
// player overlay, and the reject dialog. State lives in ClipStore /
// PlayerModel; this file only renders and forwards events.

import {
  ClipCard,
  Layer,
  REJECTION_REASONS,
  RejectionReason,
  ReviewApi,
  Status,
  validateDecision,
} from "./api.js";
import { PlayerModel } from "./player.js";
import { ClipStore } from "./state.js";

const api = new ReviewApi("");
const store = new ClipStore(api);

const el = {
  banner: document.getElementById("banner") as HTMLDivElement,
  grid: document.getElementById("grid") as HTMLDivElement,
  counts: document.getElementById("counts") as HTMLSpanElement,
  binFilter: document.getElementById("bin-filter") as HTMLSelectElement,
  statusFilter: document.getElementById("status-filter") as HTMLSelectElement,
  splitFilter: document.getElementById("split-filter") as HTMLSelectElement,
  player: document.getElementById("player") as HTMLDivElement,
  rejectDialog: document.getElementById("reject-dialog") as HTMLDivElement,
};

let player: PlayerModel | null = null;
let playerClip: ClipCard | null = null;
let playTimer: number | null = null;

// ---------------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------------

function shadowSummary(card: ClipCard): string {
  const p = card.shadow_params;
  if (!p) return "";
  return `θ ${p.theta.toFixed(0)}° · shear ${p.s_x.toFixed(2)} · α ${p.alpha.toFixed(2)}`;
}

function renderGrid(): void {
  el.banner.hidden = store.error === null;
  if (store.error !== null) {
    el.banner.innerHTML = "";
    el.banner.append(`service unreachable: ${store.error} `);
    const retry = document.createElement("button");
    retry.textContent = "retry";
    retry.onclick = () => void store.load();
    el.banner.append(retry);
  }

  el.grid.innerHTML = "";
  if (store.loading) {
    el.grid.textContent = "loading…";
    return;
  }
  if (store.clips.length === 0 && store.error === null) {
    const empty = document.createElement("div");
    empty.className = "empty-state";
    empty.textContent = "No clips match the current filters.";
    el.grid.append(empty);
  }
  for (const { card, index: i } of store.visible()) {
    const div = document.createElement("div");
    div.className = `card status-${card.status}` + (i === store.selectedIndex ? " selected" : "");
    div.tabIndex = -1;

    const img = document.createElement("img");
    img.src = api.frameUrl(card.clip_id, 0, "input");
    img.alt = card.clip_id;
    img.onerror = () => img.classList.add("missing");
    div.append(img);

    const title = document.createElement("div");
    title.className = "card-title";
    title.textContent = card.clip_id;
    div.append(title);

    const meta = document.createElement("div");
    meta.className = "card-meta";
    const pct = card.crowd_percent === null ? "?" : card.crowd_percent.toFixed(1);
    meta.textContent = `bin ${card.crowd_bin ?? "?"} · crowd ${pct}% · ${card.status}`;
    div.append(meta);

    const shadow = document.createElement("div");
    shadow.className = "card-shadow";
    shadow.textContent = shadowSummary(card);
    div.append(shadow);

    div.onclick = () => {
      store.selectedIndex = i;
      renderGrid();
    };
    div.ondblclick = () => void openPlayer(card);
    el.grid.append(div);
  }
  const pages = store.pageCount > 1 ? ` · page ${store.page + 1}/${store.pageCount}` : "";
  el.counts.textContent = `${store.clips.length} clips${pages}`;
}

store.subscribe(renderGrid);

// ---------------------------------------------------------------------------
// decisions
// ---------------------------------------------------------------------------

async function decide(card: ClipCard, verdict: Status, reasons: RejectionReason[] = [], note = ""): Promise<void> {
  if (verdict === "pending") return;
  try {
    await store.applyDecision(card.clip_id, { verdict, reasons, note });
  } catch (err) {
    window.alert(`decision failed: ${err instanceof Error ? err.message : String(err)}`);
  }
}

function openRejectDialog(card: ClipCard): void {
  el.rejectDialog.hidden = false;
  el.rejectDialog.innerHTML = "";
  const box = document.createElement("div");
  box.className = "dialog-box";
  box.append(Object.assign(document.createElement("h3"), { textContent: `Reject ${card.clip_id}` }));

  const checkboxes: HTMLInputElement[] = [];
  for (const reason of REJECTION_REASONS) {
    const label = document.createElement("label");
    const cb = document.createElement("input");
    cb.type = "checkbox";
    cb.value = reason;
    checkboxes.push(cb);
    label.append(cb, ` ${reason.replace(/_/g, " ")}`);
    box.append(label);
  }
  const note = document.createElement("input");
  note.type = "text";
  note.placeholder = "note (optional)";
  box.append(note);

  const hint = document.createElement("div");
  hint.className = "dialog-hint";
  box.append(hint);

  const submit = document.createElement("button");
  submit.textContent = "reject";
  submit.disabled = true;
  const refreshGuard = () => {
    const reasons = checkboxes.filter((c) => c.checked).map((c) => c.value as RejectionReason);
    const problem = validateDecision({ verdict: "rejected", reasons });
    submit.disabled = problem !== null;
    hint.textContent = problem ?? "";
  };
  checkboxes.forEach((c) => (c.onchange = refreshGuard));
  refreshGuard();

  submit.onclick = async () => {
    const reasons = checkboxes.filter((c) => c.checked).map((c) => c.value as RejectionReason);
    closeRejectDialog();
    await decide(card, "rejected", reasons, note.value);
  };
  const cancel = document.createElement("button");
  cancel.textContent = "cancel";
  cancel.onclick = closeRejectDialog;
  box.append(submit, cancel);
  el.rejectDialog.append(box);
}

function closeRejectDialog(): void {
  el.rejectDialog.hidden = true;
  el.rejectDialog.innerHTML = "";
}

// ---------------------------------------------------------------------------
// player
// ---------------------------------------------------------------------------

async function openPlayer(card: ClipCard): Promise<void> {
  const detail = await api.clipDetail(card.clip_id);
  player = new PlayerModel(detail.frame_count, detail.fps || 16);
  playerClip = card;
  renderPlayer();
}

function closePlayer(): void {
  if (playTimer !== null) window.clearInterval(playTimer);
  playTimer = null;
  player = null;
  playerClip = null;
  el.player.hidden = true;
  el.player.innerHTML = "";
}

function renderPlayer(): void {
  if (!player || !playerClip) return;
  const p = player;
  const card = playerClip;
  el.player.hidden = false;
  el.player.innerHTML = "";

  const box = document.createElement("div");
  box.className = "player-box";
  box.append(Object.assign(document.createElement("h3"), { textContent: card.clip_id }));

  const panels = document.createElement("div");
  panels.className = "panels";
  for (const layer of p.visibleLayers()) {
    const img = document.createElement("img");
    img.src = api.frameUrl(card.clip_id, p.index, layer);
    img.alt = `${layer} frame ${p.index}`;
    // Missing frames become a placeholder tile; playback keeps going.
    img.onerror = () => img.classList.add("missing");
    panels.append(img);
  }
  box.append(panels);

  const scrubber = document.createElement("input");
  scrubber.type = "range";
  scrubber.min = "0";
  scrubber.max = String(p.lastFrame);
  scrubber.value = String(p.index);
  scrubber.oninput = () => {
    p.seek(Number(scrubber.value));
    renderPlayer();
  };
  box.append(scrubber);

  const controls = document.createElement("div");
  controls.className = "controls";
  const playBtn = document.createElement("button");
  playBtn.textContent = p.playing ? "pause" : "play";
  playBtn.onclick = () => {
    if (p.togglePlaying()) {
      playTimer = window.setInterval(() => {
        p.tick();
        renderPlayer();
      }, p.intervalMs);
    } else if (playTimer !== null) {
      window.clearInterval(playTimer);
      playTimer = null;
    }
    renderPlayer();
  };
  controls.append(playBtn);

  for (const layer of ["input", "mask", "gt"] as Layer[]) {
    const btn = document.createElement("button");
    btn.textContent = layer;
    btn.className = p.layer === layer && !p.sideBySide ? "active" : "";
    btn.onclick = () => {
      p.sideBySide = false;
      p.setLayer(layer);
      renderPlayer();
    };
    controls.append(btn);
  }
  const side = document.createElement("button");
  side.textContent = "input | gt";
  side.className = p.sideBySide ? "active" : "";
  side.onclick = () => {
    p.toggleSideBySide();
    renderPlayer();
  };
  controls.append(side);

  const frameLabel = document.createElement("span");
  frameLabel.textContent = ` frame ${p.index}/${p.lastFrame}`;
  controls.append(frameLabel);

  const accept = document.createElement("button");
  accept.textContent = "accept (a)";
  accept.onclick = () => void decide(card, "accepted");
  const reject = document.createElement("button");
  reject.textContent = "reject (x)";
  reject.onclick = () => openRejectDialog(card);
  const close = document.createElement("button");
  close.textContent = "close (esc)";
  close.onclick = closePlayer;
  controls.append(accept, reject, close);

  box.append(controls);
  el.player.append(box);
}

// ---------------------------------------------------------------------------
// keyboard + filters
// ---------------------------------------------------------------------------

document.addEventListener("keydown", (ev) => {
  if (!el.rejectDialog.hidden) {
    if (ev.key === "Escape") closeRejectDialog();
    return;
  }
  if (player !== null && playerClip !== null) {
    if (ev.key === "Escape") closePlayer();
    else if (ev.key === "ArrowRight") {
      player.step(1);
      renderPlayer();
    } else if (ev.key === "ArrowLeft") {
      player.step(-1);
      renderPlayer();
    } else if (ev.key === " ") {
      ev.preventDefault();
      (el.player.querySelector("button") as HTMLButtonElement)?.click();
    } else if (ev.key === "l") {
      player.cycleLayer();
      renderPlayer();
    } else if (ev.key === "a") void decide(playerClip, "accepted");
    else if (ev.key === "x") openRejectDialog(playerClip);
    return;
  }
  const card = store.selected;
  if (ev.key === "ArrowRight") store.moveSelection(1);
  else if (ev.key === "ArrowLeft") store.moveSelection(-1);
  else if (ev.key === "ArrowDown") store.moveSelection(4);
  else if (ev.key === "ArrowUp") store.moveSelection(-4);
  else if (ev.key === "PageDown") store.turnPage(1);
  else if (ev.key === "PageUp") store.turnPage(-1);
  else if (ev.key === "Enter" && card) void openPlayer(card);
  else if (ev.key === "a" && card) void decide(card, "accepted");
  else if (ev.key === "x" && card) openRejectDialog(card);
});

function readFilters(): void {
  const bin = el.binFilter.value === "" ? undefined : Number(el.binFilter.value);
  const status = el.statusFilter.value === "" ? undefined : (el.statusFilter.value as Status);
  const split = el.splitFilter.value === "" ? undefined : el.splitFilter.value;
  void store.setFilters({ bin, status, split });
}

el.binFilter.onchange = readFilters;
el.statusFilter.onchange = readFilters;
el.splitFilter.onchange = readFilters;

void store.load();
