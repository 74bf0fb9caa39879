/**
 * Client-side pre-validation. Mirrors the gateway's rejection rules so a
 * draft that would 422 never leaves the browser; the server remains the
 * authority and re-checks everything.
 */

import type { IntentDoc, RuleDoc } from "./types.js";

export interface Problem {
  path: string;
  message: string;
}

export const CORE_ASPECTS = [
  "whole",
  "voice",
  "style",
  "likeness",
  "lyrics",
  "melody",
  "beat",
  "rhythm",
  "harmony",
  "composition",
  "recording",
] as const;

export const ROLES = ["descriptor", "transformation"] as const;
export const COMBINATIONS = ["original_only", "any", "none"] as const;

export function isValidAspect(value: string): boolean {
  if ((CORE_ASPECTS as readonly string[]).includes(value)) return true;
  if (value.startsWith("stem:")) {
    const label = value.slice("stem:".length);
    return label.length > 0 && label === label.toLowerCase() && label.trim() !== "";
  }
  return false;
}

/** Same checks, same order, as the registry runs before accepting a write. */
export function validateRules(rules: RuleDoc[]): Problem[] {
  const problems: Problem[] = [];
  rules.forEach((rule, i) => {
    const where = `rules[${i}]`;
    if (rule.aspect !== "any" && !isValidAspect(rule.aspect)) {
      problems.push({ path: where, message: `unknown aspect '${rule.aspect}'` });
    }
    if (rule.roles.length === 0) {
      problems.push({ path: where, message: "roles must be non-empty" });
    } else if (rule.roles.some((r) => !(ROLES as readonly string[]).includes(r))) {
      problems.push({
        path: where,
        message: "roles must be a subset of [descriptor, transformation]",
      });
    }
    if (!(COMBINATIONS as readonly string[]).includes(rule.combination)) {
      problems.push({
        path: where,
        message: `unknown combination '${rule.combination}'`,
      });
    }
    if (rule.validity !== undefined) {
      if (
        rule.validity.until !== undefined &&
        !(rule.validity.from < rule.validity.until)
      ) {
        problems.push({
          path: where,
          message: "validity window requires from < until",
        });
      }
    }
    const caps = rule.qualifier_constraints?.quality_caps;
    if (caps) {
      for (const [key, cap] of Object.entries(caps)) {
        if (typeof cap !== "number" || Number.isNaN(cap)) {
          problems.push({
            path: `${where}.quality_caps.${key}`,
            message: "cap must be a number",
          });
        }
      }
    }
  });
  return problems;
}

export function validateWindow(window: { from: number; until?: number } | null): Problem[] {
  if (window === null) return [];
  if (window.until !== undefined && !(window.from < window.until)) {
    return [{ path: "validity", message: "validity window requires from < until" }];
  }
  return [];
}

/**
 * Pre-flight checks on a draft intent. Catches what the gateway would
 * refuse with a field-level 400 so the composer can point at the field
 * without a round trip.
 */
export function validateIntentDraft(intent: IntentDoc): Problem[] {
  const problems: Problem[] = [];
  if (intent.descriptors.length === 0) {
    problems.push({
      path: "descriptors",
      message: "at least one descriptor is required",
    });
  }
  intent.descriptors.forEach((d, i) => {
    const path = `descriptors[${i}]`;
    if (d.kind === "specific" && (!d.ref || !d.ref.name.trim())) {
      problems.push({ path, message: "specific descriptor requires a named ref" });
    }
    if (d.kind === "generic" && !d.category) {
      problems.push({ path, message: "generic descriptor requires a category" });
    }
    if (d.kind === "original" && !d.payload_digest) {
      problems.push({ path, message: "original descriptor requires an upload" });
    }
    if (!isValidAspect(d.aspect)) {
      problems.push({ path, message: `unknown aspect '${d.aspect}'` });
    }
  });
  intent.transformations.forEach((t, i) => {
    const path = `transformations[${i}]`;
    if (t.kind === "specific" && (!t.ref || !t.ref.name.trim())) {
      problems.push({ path, message: "specific transformation requires a named ref" });
    }
    if (t.kind === "generic" && !t.category) {
      problems.push({ path, message: "generic transformation requires a category" });
    }
    if (!isValidAspect(t.aspect)) {
      problems.push({ path, message: `unknown aspect '${t.aspect}'` });
    }
  });
  intent.qualifiers.forEach((q, i) => {
    if (!q.value.trim()) {
      problems.push({ path: `qualifiers[${i}]`, message: "qualifier needs a value" });
    }
  });
  return problems;
}
