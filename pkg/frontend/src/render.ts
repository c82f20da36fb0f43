/* DOM rendering: role badge, instruction, highlighted excerpt, history,
 * input controls, reject panel, retry banner. Pure view over the controller
 * state; all writes go through the controller. */

import { SessionController } from "./session.js";
import { instructionFor, REJECTION_REASONS, ROLE_LABELS, yesnoDirective } from "./templates.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderExcerpt(container: HTMLElement, text: string, range: [number, number]): void {
  const [lo, hi] = range;
  container.append(document.createTextNode(text.slice(0, lo)));
  const mark = el("mark", "grounding-highlight", text.slice(lo, hi));
  container.append(mark);
  container.append(document.createTextNode(text.slice(hi)));
}

export function renderApp(root: HTMLElement, controller: SessionController): void {
  const draw = (): void => {
    const state = controller.getState();
    root.textContent = "";

    if (state.phase === "idle") {
      root.append(el("p", "status", "Pick a flow to begin."));
      return;
    }
    if (state.phase === "loading") {
      root.append(el("p", "status", "Working..."));
      return;
    }
    if (state.phase === "error") {
      const banner = el("div", "retry-banner");
      banner.append(el("p", "error-text", `Service unreachable: ${state.error}`));
      const retry = el("button", "retry-button", "Retry");
      retry.addEventListener("click", () => void controller.retry());
      banner.append(retry);
      root.append(banner);
      // typed text must survive the outage
      const draft = el("textarea", "utterance-input");
      draft.value = state.draft;
      draft.addEventListener("input", () => controller.setDraft(draft.value));
      root.append(draft);
      return;
    }
    if (state.phase === "done" || state.phase === "rejected") {
      const note =
        state.phase === "done"
          ? `Dialogue complete: ${state.turnsWritten} turns written. Thank you!`
          : "Scene rejected; this dialogue is closed.";
      root.append(el("p", "status final", note));
      const history = state.scene?.history ?? [];
      if (history.length) root.append(renderHistory(history));
      return;
    }

    const payload = state.scene!;
    const scene = payload.scene!;

    const header = el("div", "scene-header");
    header.append(el("span", `role-badge role-${scene.role}`, ROLE_LABELS[scene.role] ?? scene.role));
    header.append(
      el("span", "progress", `Turn ${payload.turn_id} of ${payload.total_turns}`),
    );
    root.append(header);

    root.append(el("p", "instruction", instructionFor(scene)));
    const directive = yesnoDirective(scene);
    if (directive) root.append(el("p", "yesno-directive", directive));

    const excerpt = payload.document_excerpt;
    const panel = el("div", "document-excerpt");
    if (excerpt) {
      renderExcerpt(panel, excerpt.text, excerpt.highlight);
    } else {
      for (const g of payload.grounding ?? []) {
        panel.append(el("mark", "grounding-highlight", g.text || g.sp_id));
      }
    }
    root.append(panel);

    const history = payload.history ?? [];
    if (history.length) root.append(renderHistory(history));

    const input = el("textarea", "utterance-input");
    input.placeholder = "Write this turn...";
    input.value = state.draft;
    root.append(input);

    const submit = el("button", "submit-button", "Submit turn");
    submit.disabled = !controller.canSubmit();
    input.addEventListener("input", () => {
      controller.setDraft(input.value);
    });
    submit.addEventListener("click", () => void controller.submit());
    root.append(submit);

    root.append(renderRejectPanel(controller));
  };

  controller.onChange(draw);
  draw();
}

function renderHistory(turns: { turn_id: number; role: string; utterance: string }[]): HTMLElement {
  const list = el("ol", "history");
  for (const t of turns) {
    const item = el("li", `history-turn history-${t.role}`);
    item.append(el("span", "history-role", t.role));
    item.append(el("span", "history-text", t.utterance));
    list.append(item);
  }
  return list;
}

function renderRejectPanel(controller: SessionController): HTMLElement {
  const details = el("details", "reject-panel");
  details.append(el("summary", "reject-summary", "I cannot write this turn"));
  const form = el("div", "reject-form");
  const name = `reject-reason-${Math.random().toString(36).slice(2)}`;
  for (const reason of REJECTION_REASONS) {
    const label = el("label", "reject-option");
    const radio = el("input");
    radio.type = "radio";
    radio.name = name;
    radio.value = reason;
    label.append(radio);
    label.append(document.createTextNode(reason));
    form.append(label);
  }
  const confirm = el("button", "reject-button", "Reject this scene");
  confirm.addEventListener("click", () => {
    const checked = form.querySelector<HTMLInputElement>("input[type=radio]:checked");
    if (checked) void controller.reject(checked.value);
  });
  form.append(confirm);
  details.append(form);
  return details;
}
