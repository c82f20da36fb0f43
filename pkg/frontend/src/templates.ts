/* Writer-facing wording: instruction per (role, act) and the fixed rejection
 * reason list. The reason sentences must match the service verbatim. */

import type { SceneInfo } from "./api.js";

export const REJECTION_REASONS: readonly string[] = [
  "The selected-text is not a contextual condition.",
  "The selected-text is not a solution to the query.",
  "Cannot write a turn to be coherent with the chat history.",
  "There is not enough information in the selected (or adjacent) text.",
  "The selected-text is not Comprehensible.",
  "Other.",
];

export const ROLE_LABELS: Record<string, string> = {
  user: "You are the USER",
  agent: "You are the AGENT",
};

export function instructionFor(scene: SceneInfo): string {
  switch (scene.da) {
    case "user_request_query":
      return "Ask for help with the highlighted content, phrased in your own words.";
    case "agent_request_query":
      return "Ask the user whether the highlighted condition applies to their situation.";
    case "user_respond_yesno":
      return scene.yesno_outcome === "no"
        ? "Answer the agent's question with a NO, in natural words of your own."
        : "Answer the agent's question with a YES, in natural words of your own.";
    case "agent_respond_reply":
      return "Answer the user's request using the highlighted content and the chat so far.";
    default:
      return scene.instruction || "Write the next turn.";
  }
}

export function yesnoDirective(scene: SceneInfo): string | null {
  if (scene.da !== "user_respond_yesno") return null;
  return scene.yesno_outcome === "no" ? "Answer: NO" : "Answer: YES";
}
