import { execFileSync, spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export function makeTempDir(): string {
  return mkdtempSync(join(tmpdir(), "pamkit-export-"));
}

export function removeDir(dir: string): void {
  rmSync(dir, { recursive: true, force: true });
}

/**
 * Run an inline Python script against the installed scoring package.
 * Extra argv entries land in sys.argv[1:]; binary stdin is passed through.
 * Throws with stderr attached if the script fails.
 */
export function runPython(script: string, args: string[] = [], input?: Buffer): Buffer {
  try {
    return execFileSync("python3", ["-c", script, ...args], {
      input: input ?? Buffer.alloc(0),
      maxBuffer: 64 * 1024 * 1024,
    });
  } catch (e) {
    const err = e as { stderr?: Buffer };
    const stderr = err.stderr ? err.stderr.toString("utf-8") : "";
    throw new Error(`python oracle failed:\n${stderr}`);
  }
}

let pamkitChecked = false;

/** The integration suites require the Python package; fail loudly, never skip. */
export function requirePamkit(): void {
  if (pamkitChecked) return;
  const probe = spawnSync("python3", ["-c", "import pamkit"], { encoding: "utf-8" });
  if (probe.status !== 0) {
    throw new Error(
      "python3 with the pamkit package is required for these tests " +
        "(pip install -e . --no-build-isolation from the repository root)\n" +
        (probe.stderr ?? "")
    );
  }
  pamkitChecked = true;
}

export interface CliResult {
  status: number | null;
  stdout: string;
  stderr: string;
}

export function runNode(scriptPath: string, args: string[]): CliResult {
  const res = spawnSync("node", [scriptPath, ...args], { encoding: "utf-8" });
  return { status: res.status, stdout: res.stdout ?? "", stderr: res.stderr ?? "" };
}
