/**
 * Console state and affordance guards.
 *
 * The guards mirror the service's phase/role rules exactly, so the UI can
 * never emit a request the server's state machine would reject as out of
 * order or out of role.  The server stays authoritative; these guards only
 * disable controls.
 */

import type { PhaseName, Session, TurnName, WhatIfResponse } from "./api.js";

export type StepName = "toss" | "propose" | "choose" | "complete";

export interface Role {
  team: string;
  token: string;
}

export interface ConsoleState {
  session: Session | null;
  role: Role | null;
  sliderB: number;
  perceivedAdvantage: number;
  whatIf: WhatIfResponse | null;
  whatIfError: string | null;
  networkError: string | null;
}

export function initialState(): ConsoleState {
  return {
    session: null,
    role: null,
    sliderB: 0,
    perceivedAdvantage: 0,
    whatIf: null,
    whatIfError: null,
    networkError: null,
  };
}

export function applySession(state: ConsoleState, session: Session): ConsoleState {
  return { ...state, session, networkError: null };
}

export function applyNetworkError(state: ConsoleState, message: string): ConsoleState {
  // Network failures must not mutate protocol-facing state.
  return { ...state, networkError: message };
}

export function activeStep(session: Session | null): StepName {
  switch (session?.phase ?? "created") {
    case "created":
      return "toss";
    case "tossed":
      return "propose";
    case "proposed":
      return "choose";
    default:
      return "complete";
  }
}

export function isLucky(state: ConsoleState): boolean {
  return Boolean(state.session?.toss && state.role && state.session.toss.lucky === state.role.team);
}

export function isUnlucky(state: ConsoleState): boolean {
  return Boolean(state.session?.toss && state.role && state.session.toss.unlucky === state.role.team);
}

/** Either captain may run the toss, but only while the session is fresh. */
export function canToss(state: ConsoleState): boolean {
  return state.session?.phase === "created" && state.role !== null;
}

/** Proposing is the unlucky captain's move, only right after the toss. */
export function canPropose(state: ConsoleState): boolean {
  return state.session?.phase === "tossed" && isUnlucky(state);
}

/** Choosing is the lucky captain's move, only once options exist. */
export function canChoose(state: ConsoleState): boolean {
  return state.session?.phase === "proposed" && isLucky(state);
}

/** What-if probing works from the toss onward and stays private per role. */
export function canWhatIf(state: ConsoleState): boolean {
  return state.session !== null && state.session.phase !== "created" && state.role !== null;
}

export interface LegalActions {
  toss: boolean;
  propose: boolean;
  choose: boolean;
  whatIf: boolean;
}

export function legalActions(state: ConsoleState): LegalActions {
  return {
    toss: canToss(state),
    propose: canPropose(state),
    choose: canChoose(state),
    whatIf: canWhatIf(state),
  };
}

/** Turn the slider's advantage sign into the proposer's declared turn. */
export function advantageousTurnFor(perceivedAdvantage: number): TurnName {
  return perceivedAdvantage < 0 ? "bowl_first" : "bat_first";
}

export interface OptionCard {
  option: 1 | 2;
  turn: TurnName;
  bonusDelta: number;
  utility: number | null;
  chosen: boolean;
}

/**
 * Display bundles for the two option cards once a proposal exists.
 * Utilities stay hidden unless this role asked for them (a captain's
 * valuation is private strategy).
 */
export function optionCards(state: ConsoleState, showUtilities: boolean): OptionCard[] {
  const proposal = state.session?.proposal;
  if (!proposal) return [];
  const chosen = state.session?.allocation?.chosen;
  const utilities: Array<number | null> =
    showUtilities && state.whatIf && state.whatIf.candidate_b === proposal.b
      ? [state.whatIf.option1_utility, state.whatIf.option2_utility]
      : [null, null];
  return [proposal.option1, proposal.option2].map((bundle, index) => ({
    option: (index + 1) as 1 | 2,
    turn: bundle.turn,
    bonusDelta: bundle.bonus_delta,
    utility: utilities[index] ?? null,
    chosen: Boolean(chosen && chosen.turn === bundle.turn),
  }));
}

export interface WhatIfBars {
  option1: number;
  option2: number;
  equal: boolean;
  crossingB: number;
}

/** Bar lengths for the live what-if display; equal bars mark indifference. */
export function whatIfBars(result: WhatIfResponse, tolerance = 1e-9): WhatIfBars {
  return {
    option1: result.option1_utility,
    option2: result.option2_utility,
    equal: Math.abs(result.option1_utility - result.option2_utility) <= tolerance,
    crossingB: result.indifference_bonus,
  };
}

export function phaseLabel(phase: PhaseName): string {
  return { created: "Toss", tossed: "Propose", proposed: "Choose", complete: "Complete" }[phase];
}
