/** Wire types matching the annotation service JSON API. */
export {};
