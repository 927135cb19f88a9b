/**
 * Selection state for one task: an ordered list of up to three distinct
 * labels.  Position in the list is the rank, so deselecting an earlier
 * pick renumbers the rest by construction.
 */
export const RANK_LIMIT = {
    single: 1,
    ranked: 3,
};
/** Toggle a label in/out of the selection, keeping click order. */
export function toggleRank(ranks, label, limit) {
    if (ranks.includes(label)) {
        return ranks.filter((r) => r !== label);
    }
    if (ranks.length >= limit) {
        return [...ranks];
    }
    return [...ranks, label];
}
/** 1-based rank badge for a label, or 0 when unselected. */
export function rankOf(ranks, label) {
    return ranks.indexOf(label) + 1;
}
