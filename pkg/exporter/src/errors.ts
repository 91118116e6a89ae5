/** Single failure type for the tool; the CLI maps it to exit code 1. */
export class ExportError extends Error {}
