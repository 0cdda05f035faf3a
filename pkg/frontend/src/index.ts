export { ApiClient, ApiRequestError } from "./api.js";
export { colorForLabel, FALLBACK_COLOR, LABEL_COLORS } from "./colors.js";
export { DocumentViewState } from "./documentView.js";
export {
  brushTimeline,
  clearTimeline,
  emptyFilter,
  GRADE_SLIDER,
  gradeRank,
  isValidGrade,
  setMinGrade,
  toggleType,
  toQueryParams,
} from "./filters.js";
export {
  DEFAULT_SIMULATION,
  GraphScene,
  LOCAL_SIMULATION_LIMIT,
  shouldSimulateLocally,
} from "./graphScene.js";
export { ViewModel } from "./viewmodel.js";
export type * from "./types.js";
