/** The three-state label cycle used on sentence cards:
 * unlabeled -> relevant (green) -> irrelevant (pink) -> unlabeled. */

import type { Label } from "./types.js";

export function cycleLabel(current: Label | null): Label | null {
  if (current === null) return "relevant";
  if (current === "relevant") return "irrelevant";
  return null;
}

/** Toggle for already-labeled sentences (History/Documents relabeling);
 * submitted labels can only be replaced, not removed. */
export function toggleLabel(current: Label): Label {
  return current === "relevant" ? "irrelevant" : "relevant";
}

export function labelClass(label: Label | null): string {
  if (label === "relevant") return "label-green";
  if (label === "irrelevant") return "label-pink";
  return "label-neutral";
}
