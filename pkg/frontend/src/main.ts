import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { cycleView, selectInstance, setPrompt, setSeed, setW0 } from "./state.js";
import type { UISessionState } from "./types.js";
import { historyRows, instanceRows, sceneSummary, viewPanel } from "./view.js";

const api = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function render(state: UISessionState): void {
  el<HTMLDivElement>("summary").textContent = sceneSummary(state.scene);

  const banner = el<HTMLDivElement>("error");
  banner.textContent = state.error ?? "";
  banner.hidden = !state.error;

  const panel = viewPanel(state);
  el<HTMLSpanElement>("view-label").textContent = panel.label;
  const img = el<HTMLImageElement>("render");
  if (panel.imagePath) {
    // cache-bust per action count so edits show up immediately
    img.src = `${panel.imagePath}&t=${state.history.length}`;
    img.hidden = false;
  } else {
    img.hidden = true;
  }

  const list = el<HTMLUListElement>("instances");
  list.replaceChildren(
    ...instanceRows(state).map((row) => {
      const li = document.createElement("li");
      li.textContent = `#${row.index} ${row.assetId} ${row.position}`;
      li.className = row.selected ? "selected" : "";
      li.onclick = () => {
        controller.state = selectInstance(controller.state, row.selected ? null : row.index);
        render(controller.state);
      };
      return li;
    }),
  );

  const history = el<HTMLUListElement>("history");
  history.replaceChildren(
    ...historyRows(state.history).map((row) => {
      const li = document.createElement("li");
      const button = document.createElement("button");
      button.textContent = "replay";
      button.onclick = () => void controller.replayEntry(row.index);
      li.textContent = `${row.summary} [seed ${row.seed}] `;
      li.appendChild(button);
      return li;
    }),
  );

  (el<HTMLButtonElement>("generate")).disabled = state.busy || !state.sessionId;
  (el<HTMLButtonElement>("replace")).disabled =
    state.busy || !state.sessionId || state.selectedInstance === null;
}

const controller = new SessionController(api, render);

function wire(): void {
  el<HTMLButtonElement>("new-session").onclick = () => {
    const side = 2.0;
    void controller.createFromFloor(
      [
        [-side, -side],
        [side, -side],
        [side, side],
        [-side, side],
      ],
      "toy",
    );
  };
  el<HTMLButtonElement>("generate").onclick = () => void controller.generate();
  el<HTMLButtonElement>("replace").onclick = () => void controller.replace();
  el<HTMLButtonElement>("view-prev").onclick = () => {
    controller.state = cycleView(controller.state, -1);
    render(controller.state);
  };
  el<HTMLButtonElement>("view-next").onclick = () => {
    controller.state = cycleView(controller.state, 1);
    render(controller.state);
  };
  el<HTMLInputElement>("prompt").oninput = (e) => {
    controller.state = setPrompt(controller.state, (e.target as HTMLInputElement).value);
  };
  el<HTMLInputElement>("w0").oninput = (e) => {
    controller.state = setW0(controller.state, Number((e.target as HTMLInputElement).value));
  };
  el<HTMLInputElement>("seed").oninput = (e) => {
    const raw = (e.target as HTMLInputElement).value.trim();
    controller.state = setSeed(controller.state, raw === "" ? null : Number(raw));
  };
  render(controller.state);
}

wire();
