import { SuggestClient } from "./client.js";
import { ConsoleController } from "./controller.js";
import { renderHistory, renderPanels } from "./view.js";

declare global {
  interface Window {
    TRIAGE_API_BASE?: string;
  }
}

const baseUrl = window.TRIAGE_API_BASE ?? "";
const input = document.getElementById("description") as HTMLTextAreaElement;
const panels = document.getElementById("panels") as HTMLElement;
const history = document.getElementById("history") as HTMLElement;
const submit = document.getElementById("submit") as HTMLButtonElement;

const controller = new ConsoleController({
  client: new SuggestClient(baseUrl),
  onChange: (state) => {
    panels.innerHTML = renderPanels(state);
    history.innerHTML = renderHistory(state);
    submit.disabled = !controller.canSubmit();
  },
});

input.addEventListener("input", () => controller.handleInput(input.value));

panels.addEventListener("click", (event) => {
  const row = (event.target as HTMLElement).closest<HTMLElement>("li.row");
  if (!row || row.dataset.name === undefined) {
    return;
  }
  if (row.dataset.kind === "group") {
    controller.selectGroup(row.dataset.name);
  } else if (row.dataset.kind === "resolver") {
    controller.selectResolver(row.dataset.name);
  }
});

submit.addEventListener("click", () => {
  if (controller.canSubmit()) {
    void controller.submitAssignment();
  }
});
