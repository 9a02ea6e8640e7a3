/** Payload shapes of the grading service API (see docs/schemas.md). */
export {};
