// Fixture loading that works under the jsdom environment (import.meta.url
// is rewritten to an http: URL there, so resolve from the project root).

import { readFileSync } from "node:fs";
import { resolve } from "node:path";

export function loadFixture<T>(name: string): T {
  return JSON.parse(readFileSync(resolve(process.cwd(), "fixtures", name), "utf-8")) as T;
}

export function projectRoot(): string {
  return resolve(process.cwd(), "..");
}
