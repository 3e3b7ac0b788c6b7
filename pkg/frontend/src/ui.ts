/**
 * DOM rendering for the captain console.  All protocol intelligence lives
 * in state.ts; this module turns a ConsoleState into elements and wires
 * control events back to the provided action callbacks.
 */

import type { Session, TurnName } from "./api.js";
import {
  ConsoleState,
  activeStep,
  canChoose,
  canPropose,
  canToss,
  canWhatIf,
  isUnlucky,
  optionCards,
  whatIfBars,
} from "./state.js";

export interface Actions {
  onToss: () => void;
  onSlide: (b: number) => void;
  onAdvantageChange: (aHat: number) => void;
  onPropose: (b: number, turn: TurnName) => void;
  onChoose: (option: 1 | 2) => void;
  onRetry: () => void;
}

const STEPS: Array<{ key: string; title: string }> = [
  { key: "toss", title: "1 · Toss" },
  { key: "propose", title: "2 · Propose" },
  { key: "choose", title: "3 · Choose" },
  { key: "complete", title: "Result" },
];

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function turnWords(turn: TurnName): string {
  return turn === "bat_first" ? "bat first" : "bowl first";
}

function renderBanner(doc: Document, state: ConsoleState, actions: Actions): HTMLElement | null {
  if (!state.networkError) return null;
  const banner = el(doc, "div", "banner error");
  banner.append(el(doc, "span", undefined, `Network problem: ${state.networkError}`));
  const retry = el(doc, "button", "retry", "Retry");
  retry.addEventListener("click", actions.onRetry);
  banner.append(retry);
  return banner;
}

function renderTossStep(doc: Document, state: ConsoleState, actions: Actions): HTMLElement {
  const section = el(doc, "section", "step step-toss");
  const toss = state.session?.toss;
  if (toss) {
    section.append(
      el(doc, "p", "toss-result",
         `${toss.lucky} won the toss (coin ${toss.coin_draw}, ${toss.seed_trace}); ` +
         `${toss.unlucky} must propose.`),
    );
  } else {
    const button = el(doc, "button", "do-toss", "Run the toss");
    button.disabled = !canToss(state);
    button.addEventListener("click", actions.onToss);
    section.append(button);
  }
  return section;
}

function renderProposeStep(doc: Document, state: ConsoleState, actions: Actions): HTMLElement {
  const section = el(doc, "section", "step step-propose");
  const mayPropose = canPropose(state);
  const mayProbe = canWhatIf(state) && isUnlucky(state) && state.session?.phase === "tossed";

  if (mayProbe) {
    const advantage = el(doc, "input", "advantage-input") as HTMLInputElement;
    advantage.type = "number";
    advantage.value = String(state.perceivedAdvantage);
    advantage.title = "Perceived advantage in runs (positive favors batting first)";
    advantage.addEventListener("change", () =>
      actions.onAdvantageChange(Number(advantage.value)));
    section.append(advantage);

    const slider = el(doc, "input", "bonus-slider") as HTMLInputElement;
    slider.type = "range";
    slider.min = "0";
    slider.max = String(Math.max(100, Math.ceil(Math.abs(state.perceivedAdvantage)) + 50));
    slider.step = "1";
    slider.value = String(state.sliderB);
    slider.addEventListener("input", () => actions.onSlide(Number(slider.value)));
    section.append(slider);

    if (state.whatIf) {
      const bars = whatIfBars(state.whatIf);
      const chart = el(doc, "div", "whatif-bars");
      const bar1 = el(doc, "div", "bar option1");
      bar1.style.width = `${(bars.option1 * 100).toFixed(1)}%`;
      bar1.dataset.utility = bars.option1.toFixed(4);
      const bar2 = el(doc, "div", "bar option2");
      bar2.style.width = `${(bars.option2 * 100).toFixed(1)}%`;
      bar2.dataset.utility = bars.option2.toFixed(4);
      chart.append(bar1, bar2);
      if (bars.equal) chart.classList.add("indifferent");
      section.append(chart);
      section.append(
        el(doc, "p", "indifference-marker",
           `Indifference at b* = ${bars.crossingB.toFixed(1)} runs`),
      );
    }
    if (state.whatIfError) {
      section.append(el(doc, "p", "inline-error", state.whatIfError));
    }

    const propose = el(doc, "button", "do-propose", "Submit proposal");
    propose.disabled = !mayPropose;
    propose.addEventListener("click", () =>
      actions.onPropose(state.sliderB,
                        state.perceivedAdvantage < 0 ? "bowl_first" : "bat_first"));
    section.append(propose);
  } else if (state.session?.phase === "tossed") {
    section.append(el(doc, "p", "waiting", "Waiting for the unlucky captain's proposal."));
  } else if (state.session?.proposal) {
    const p = state.session.proposal;
    section.append(el(doc, "p", "proposal-summary",
                      `Proposal: b = ${p.b} runs, ${turnWords(p.advantageous_turn)} judged advantageous.`));
  }
  return section;
}

function renderChooseStep(doc: Document, state: ConsoleState, actions: Actions): HTMLElement {
  const section = el(doc, "section", "step step-choose");
  // Utilities on the cards are the chooser's private judgment: shown only
  // when this role ran the what-if itself.
  const cards = optionCards(state, isUnlucky(state));
  for (const card of cards) {
    const node = el(doc, "div", `option-card option-${card.option}`);
    if (card.chosen) node.classList.add("chosen");
    const sign = card.bonusDelta >= 0 ? "receive" : "concede";
    node.append(el(doc, "h3", undefined, `Option ${card.option}`));
    node.append(el(doc, "p", undefined,
                   `${turnWords(card.turn)}, ${sign} ${Math.abs(card.bonusDelta)} bonus runs`));
    if (card.utility !== null) {
      node.append(el(doc, "p", "utility", `utility ${card.utility.toFixed(4)}`));
    }
    const pick = el(doc, "button", "do-choose", `Take option ${card.option}`);
    pick.disabled = !canChoose(state);
    pick.addEventListener("click", () => actions.onChoose(card.option));
    node.append(pick);
    section.append(node);
  }
  return section;
}

function renderResult(doc: Document, session: Session): HTMLElement {
  const section = el(doc, "section", "step step-complete");
  const allocation = session.allocation;
  if (allocation) {
    const line = allocation.bonus_recipient
      ? `${allocation.chooser} ${turnWords(allocation.chosen.turn)}; ` +
        `${allocation.bonus_recipient} receive ${allocation.bonus_runs} bonus runs.`
      : `${allocation.chooser} ${turnWords(allocation.chosen.turn)}; no bonus runs.`;
    section.append(el(doc, "p", "allocation-summary", line));
  }
  return section;
}

/** Render the whole console; exactly one step carries the active class. */
export function renderFlow(root: HTMLElement, state: ConsoleState, actions: Actions): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  const banner = renderBanner(doc, state, actions);
  if (banner) root.append(banner);

  if (state.role && state.session) {
    root.append(el(doc, "p", "role-line",
                   `You are the ${state.role.team} captain (session ${state.session.id}).`));
  }

  const active = activeStep(state.session);
  for (const step of STEPS) {
    const wrapper = el(doc, "div", `step-wrapper ${step.key}`);
    const heading = el(doc, "h2", "step-title", step.title);
    if (step.key === active) wrapper.classList.add("active");
    wrapper.append(heading);
    if (step.key === "toss") wrapper.append(renderTossStep(doc, state, actions));
    if (step.key === "propose") wrapper.append(renderProposeStep(doc, state, actions));
    if (step.key === "choose" && state.session?.proposal) {
      wrapper.append(renderChooseStep(doc, state, actions));
    }
    if (step.key === "complete" && state.session?.phase === "complete") {
      wrapper.append(renderResult(doc, state.session));
    }
    root.append(wrapper);
  }
}
