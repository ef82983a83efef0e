/** Keyboard-first labeling: one keystroke per decision.
 *
 *   a  mark anomalous     n  mark normal     s  skip
 *   j / ArrowDown  next   k / ArrowUp  prev  r  refresh now
 */

export type Intent =
  | { kind: "label"; label: 0 | 1 }
  | { kind: "skip" }
  | { kind: "next" }
  | { kind: "prev" }
  | { kind: "refresh" };

const KEYMAP: Record<string, Intent> = {
  a: { kind: "label", label: 1 },
  n: { kind: "label", label: 0 },
  s: { kind: "skip" },
  j: { kind: "next" },
  ArrowDown: { kind: "next" },
  k: { kind: "prev" },
  ArrowUp: { kind: "prev" },
  r: { kind: "refresh" },
};

export function intentFor(event: {
  key: string;
  ctrlKey?: boolean;
  metaKey?: boolean;
  altKey?: boolean;
  target?: unknown;
}): Intent | null {
  if (event.ctrlKey || event.metaKey || event.altKey) return null;
  const target = event.target as { tagName?: string } | undefined;
  // never swallow keys typed into form fields
  if (target?.tagName === "INPUT" || target?.tagName === "TEXTAREA") return null;
  return KEYMAP[event.key] ?? null;
}
