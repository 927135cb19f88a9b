/**
 * The fixed nine-class taxonomy: three sub-classes under each principle.
 * Order matters everywhere: digit keys 1-9 map straight onto it.
 */

export const PRINCIPLES = ["emphasis", "balance", "rhythm"] as const;

export const CLASS_LABELS = [
  "color",
  "isolation",
  "shape",
  "symmetric",
  "asymmetric",
  "crystallographic",
  "regular",
  "progressive",
  "flowing",
] as const;

export type Principle = (typeof PRINCIPLES)[number];
export type ClassLabel = (typeof CLASS_LABELS)[number];

export interface ClassInfo {
  label: ClassLabel;
  principle: Principle;
  key: string; // digit that toggles it
}

export const CLASSES: ClassInfo[] = CLASS_LABELS.map((label, i) => ({
  label,
  principle: PRINCIPLES[Math.floor(i / 3)],
  key: String(i + 1),
}));

/** Label for a digit key "1".."9", or null for anything else. */
export function labelForKey(key: string): ClassLabel | null {
  const i = Number(key) - 1;
  if (!/^[1-9]$/.test(key)) return null;
  return CLASS_LABELS[i];
}
