import { renderErrorBanner, renderResult } from "./render.js";
import { initialState, QueryController, UiQueryState } from "./state.js";
import { Strategy } from "./types.js";

// Same-origin deployment: the service mounts these assets under /ui.
const controller = new QueryController("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function readState(): UiQueryState {
  return {
    ...initialState(),
    question: el<HTMLTextAreaElement>("question").value,
    strategy: el<HTMLSelectElement>("strategy").value as Strategy,
    depth: Number(el<HTMLInputElement>("depth").value),
    keepN: Number(el<HTMLInputElement>("keep-n").value),
  };
}

async function onSubmit(event: Event): Promise<void> {
  event.preventDefault();
  const status = el<HTMLElement>("status");
  const result = el<HTMLElement>("result");
  status.textContent = "querying…";
  const next = await controller.submit(readState());
  if (next.status === "cancelled") {
    return; // a newer submission took over
  }
  if (next.status === "error" && next.lastError) {
    status.textContent = "";
    result.innerHTML = renderErrorBanner(next.lastError);
    return;
  }
  if (next.lastResponse) {
    status.textContent = "";
    result.innerHTML = renderResult(next.lastResponse);
  }
}

el<HTMLFormElement>("query-form").addEventListener("submit", (event) => {
  void onSubmit(event);
});
