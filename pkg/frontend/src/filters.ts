/** Client-side view filter state and its single-request serialization.
 *
 * Every control (timeline brush, type toggles, confidence slider) edits one
 * shared FilterState; the server always receives the combined filter in one
 * request, so composed controls are exactly one server-side filter apply.
 */

export interface FilterState {
  timeRange: [number, number] | null;
  minGrade: string | null;
  types: string[] | null;
  crossMatchOnly: boolean;
  includeHidden: boolean;
}

export function emptyFilter(): FilterState {
  return { timeRange: null, minGrade: null, types: null, crossMatchOnly: false, includeHidden: false };
}

const RELIABILITIES = ["A", "B", "C", "D", "E", "F"];

/** Slider positions from strictest (A1) to loosest (F6). */
export const GRADE_SLIDER: string[] = RELIABILITIES.flatMap((r) =>
  [1, 2, 3, 4, 5, 6].map((c) => `${r}${c}`),
);

export function isValidGrade(grade: string): boolean {
  return GRADE_SLIDER.includes(grade);
}

/** Lower rank = stricter threshold; F6 (rank 35) admits everything. */
export function gradeRank(grade: string): number {
  const rank = GRADE_SLIDER.indexOf(grade);
  if (rank < 0) throw new Error(`invalid grade ${JSON.stringify(grade)}`);
  return rank;
}

export function brushTimeline(filter: FilterState, t0: number, t1: number): FilterState {
  if (!(t0 <= t1)) throw new Error(`inverted time range: ${t0} > ${t1}`);
  return { ...filter, timeRange: [t0, t1] };
}

export function clearTimeline(filter: FilterState): FilterState {
  return { ...filter, timeRange: null };
}

export function setMinGrade(filter: FilterState, grade: string | null): FilterState {
  if (grade !== null && !isValidGrade(grade)) throw new Error(`invalid grade ${JSON.stringify(grade)}`);
  return { ...filter, minGrade: grade };
}

export function toggleType(filter: FilterState, typePrefix: string): FilterState {
  const current = filter.types ?? [];
  const next = current.includes(typePrefix)
    ? current.filter((t) => t !== typePrefix)
    : [...current, typePrefix];
  return { ...filter, types: next.length > 0 ? next : null };
}

/** Serialize to the query/body parameters the API's filter parser accepts. */
export function toQueryParams(filter: FilterState): Record<string, string> {
  const params: Record<string, string> = {};
  if (filter.timeRange) {
    params.t0 = String(filter.timeRange[0]);
    params.t1 = String(filter.timeRange[1]);
  }
  if (filter.minGrade) params.min_grade = filter.minGrade;
  if (filter.types && filter.types.length > 0) params.types = filter.types.join(",");
  if (filter.crossMatchOnly) params.cross_match_only = "true";
  if (filter.includeHidden) params.include_hidden = "true";
  return params;
}
