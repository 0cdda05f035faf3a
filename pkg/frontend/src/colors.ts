/** Fixed palette keyed to the entity label set.
 *
 * Colors follow Paul Tol's qualitative schemes, chosen for distinguishability
 * under the common forms of color-vision deficiency; labels outside the set
 * fall back to neutral grey.
 */

export const LABEL_COLORS: Readonly<Record<string, string>> = {
  PERSON: "#4477aa",
  ORGANIZATION: "#ee6677",
  LOCATION: "#228833",
  EVENT: "#ccbb44",
  PRODUCT: "#66ccee",
  LANGUAGE: "#aa3377",
  LAW: "#bbbbbb",
  DATETIME: "#ee8866",
  QUANTITY: "#44bb99",
  NUMBERS: "#99ddff",
  MISC: "#997700",
};

export const FALLBACK_COLOR = "#777777";

export function colorForLabel(label: string): string {
  return LABEL_COLORS[label] ?? FALLBACK_COLOR;
}
