/** String templating helpers for the views. No framework, no innerHTML
 * of raw server text: everything interpolated goes through esc(). */

export function esc(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function when(condition: boolean, markup: () => string): string {
  return condition ? markup() : "";
}

export function timestamp(seconds: number): string {
  return new Date(seconds * 1000).toISOString().replace(".000Z", "Z");
}
