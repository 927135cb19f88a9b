/**
 * Selection state for one task: an ordered list of up to three distinct
 * labels.  Position in the list is the rank, so deselecting an earlier
 * pick renumbers the rest by construction.
 */

import type { ClassLabel } from "./taxonomy.js";

export const RANK_LIMIT: Record<"single" | "ranked", number> = {
  single: 1,
  ranked: 3,
};

/** Toggle a label in/out of the selection, keeping click order. */
export function toggleRank(
  ranks: readonly ClassLabel[],
  label: ClassLabel,
  limit: number,
): ClassLabel[] {
  if (ranks.includes(label)) {
    return ranks.filter((r) => r !== label);
  }
  if (ranks.length >= limit) {
    return [...ranks];
  }
  return [...ranks, label];
}

/** 1-based rank badge for a label, or 0 when unselected. */
export function rankOf(ranks: readonly ClassLabel[], label: ClassLabel): number {
  return ranks.indexOf(label) + 1;
}
