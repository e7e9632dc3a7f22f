/**
 * Minimal stroke font for PNG labels: glyphs are polylines on a 4 x 6 box.
 * Lowercase input is rendered with the uppercase shapes.
 */

export type Stroke = [number, number][];

const G: Record<string, Stroke[]> = {
  "0": [[[0, 1], [1, 0], [3, 0], [4, 1], [4, 5], [3, 6], [1, 6], [0, 5], [0, 1]]],
  "1": [[[1, 1], [2, 0], [2, 6]], [[1, 6], [3, 6]]],
  "2": [[[0, 1], [1, 0], [3, 0], [4, 1], [4, 2], [0, 6], [4, 6]]],
  "3": [[[0, 0], [4, 0], [2, 2.5], [4, 3.5], [4, 5], [3, 6], [1, 6], [0, 5]]],
  "4": [[[3, 6], [3, 0], [0, 4], [4, 4]]],
  "5": [[[4, 0], [0, 0], [0, 2.5], [3, 2.5], [4, 3.5], [4, 5], [3, 6], [0, 6]]],
  "6": [[[4, 0], [1, 0], [0, 1], [0, 5], [1, 6], [3, 6], [4, 5], [4, 3.5], [3, 2.5], [0, 2.5]]],
  "7": [[[0, 0], [4, 0], [1.5, 6]]],
  "8": [
    [[1, 3], [0, 2], [0, 1], [1, 0], [3, 0], [4, 1], [4, 2], [3, 3], [1, 3]],
    [[1, 3], [0, 4], [0, 5], [1, 6], [3, 6], [4, 5], [4, 4], [3, 3]],
  ],
  "9": [[[0, 6], [3, 6], [4, 5], [4, 1], [3, 0], [1, 0], [0, 1], [0, 2.5], [1, 3.5], [4, 3.5]]],
  A: [[[0, 6], [2, 0], [4, 6]], [[0.8, 4], [3.2, 4]]],
  B: [
    [[0, 0], [0, 6]],
    [[0, 0], [3, 0], [4, 1], [4, 2], [3, 3], [0, 3]],
    [[3, 3], [4, 4], [4, 5], [3, 6], [0, 6]],
  ],
  C: [[[4, 1], [3, 0], [1, 0], [0, 1], [0, 5], [1, 6], [3, 6], [4, 5]]],
  D: [[[0, 0], [0, 6]], [[0, 0], [3, 0], [4, 1], [4, 5], [3, 6], [0, 6]]],
  E: [[[4, 0], [0, 0], [0, 6], [4, 6]], [[0, 3], [3, 3]]],
  F: [[[4, 0], [0, 0], [0, 6]], [[0, 3], [3, 3]]],
  G: [[[4, 1], [3, 0], [1, 0], [0, 1], [0, 5], [1, 6], [3, 6], [4, 5], [4, 3.5], [2.5, 3.5]]],
  H: [[[0, 0], [0, 6]], [[4, 0], [4, 6]], [[0, 3], [4, 3]]],
  I: [[[1, 0], [3, 0]], [[2, 0], [2, 6]], [[1, 6], [3, 6]]],
  J: [[[4, 0], [4, 5], [3, 6], [1, 6], [0, 5]]],
  K: [[[0, 0], [0, 6]], [[4, 0], [0, 3], [4, 6]]],
  L: [[[0, 0], [0, 6], [4, 6]]],
  M: [[[0, 6], [0, 0], [2, 3], [4, 0], [4, 6]]],
  N: [[[0, 6], [0, 0], [4, 6], [4, 0]]],
  O: [[[0, 1], [1, 0], [3, 0], [4, 1], [4, 5], [3, 6], [1, 6], [0, 5], [0, 1]]],
  P: [[[0, 6], [0, 0], [3, 0], [4, 1], [4, 2.5], [3, 3.5], [0, 3.5]]],
  Q: [
    [[0, 1], [1, 0], [3, 0], [4, 1], [4, 5], [3, 6], [1, 6], [0, 5], [0, 1]],
    [[2.5, 4.5], [4.4, 6.4]],
  ],
  R: [[[0, 6], [0, 0], [3, 0], [4, 1], [4, 2.5], [3, 3.5], [0, 3.5]], [[2, 3.5], [4, 6]]],
  S: [[[4, 1], [3, 0], [1, 0], [0, 1], [0, 2], [1, 3], [3, 3], [4, 4], [4, 5], [3, 6], [1, 6], [0, 5]]],
  T: [[[0, 0], [4, 0]], [[2, 0], [2, 6]]],
  U: [[[0, 0], [0, 5], [1, 6], [3, 6], [4, 5], [4, 0]]],
  V: [[[0, 0], [2, 6], [4, 0]]],
  W: [[[0, 0], [1, 6], [2, 3], [3, 6], [4, 0]]],
  X: [[[0, 0], [4, 6]], [[4, 0], [0, 6]]],
  Y: [[[0, 0], [2, 3], [4, 0]], [[2, 3], [2, 6]]],
  Z: [[[0, 0], [4, 0], [0, 6], [4, 6]]],
  "-": [[[1, 3], [3, 3]]],
  ".": [[[2, 5.6], [2, 6]]],
  ",": [[[2.2, 5.4], [1.6, 6.6]]],
  "=": [[[0.8, 2.3], [3.2, 2.3]], [[0.8, 3.7], [3.2, 3.7]]],
  "(": [[[3, 0], [2, 1], [2, 5], [3, 6]]],
  ")": [[[1, 0], [2, 1], [2, 5], [1, 6]]],
  "[": [[[3, 0], [2, 0], [2, 6], [3, 6]]],
  "]": [[[1, 0], [2, 0], [2, 6], [1, 6]]],
  "%": [
    [[0, 6], [4, 0]],
    [[0, 0], [1.4, 0], [1.4, 1.4], [0, 1.4], [0, 0]],
    [[2.6, 4.6], [4, 4.6], [4, 6], [2.6, 6], [2.6, 4.6]],
  ],
  "/": [[[0, 6], [4, 0]]],
  "+": [[[2, 1.2], [2, 4.8]], [[0.4, 3], [3.6, 3]]],
  "*": [[[2, 1], [2, 5]], [[0.5, 1.8], [3.5, 4.2]], [[3.5, 1.8], [0.5, 4.2]]],
  ":": [[[2, 1.6], [2, 2.2]], [[2, 4.4], [2, 5]]],
  " ": [],
};

export const GLYPH_WIDTH = 4;
export const GLYPH_HEIGHT = 6;
export const GLYPH_ADVANCE = 6;

export function glyphStrokes(ch: string): Stroke[] {
  return G[ch] ?? G[ch.toUpperCase()] ?? G["-"];
}
