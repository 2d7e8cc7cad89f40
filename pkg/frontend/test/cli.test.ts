import { mkdtempSync, readFileSync, writeFileSync, existsSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { main } from "../src/cli.js";

let dir: string;

beforeEach(() => {
  dir = mkdtempSync(join(tmpdir(), "plots-"));
  vi.spyOn(console, "log").mockImplementation(() => {});
  vi.spyOn(console, "warn").mockImplementation(() => {});
  vi.spyOn(console, "error").mockImplementation(() => {});
});

afterEach(() => {
  vi.restoreAllMocks();
});

const CDF = "scheme,latency_ms,cum_frac\npc5,1,0.500000\npc5,3,0.900000\n";
const PRR = [
  "scheme,range_m,prr,n,seed",
  "pc5,100,0.950000,800,1",
  "pc5,200,0.850000,800,1",
  "pc5,100,0.930000,800,2",
  "pc5,200,0.830000,800,2",
  "",
].join("\n");

describe("plot command", () => {
  it("writes a cdf svg", () => {
    const inPath = join(dir, "cdf.csv");
    const outPath = join(dir, "cdf.svg");
    writeFileSync(inPath, CDF);
    const rc = main(["--kind", "cdf", "--in", inPath, "--out", outPath]);
    expect(rc).toBe(0);
    const svg = readFileSync(outPath, "utf8");
    expect(svg).toContain("<svg");
    expect(svg).toContain("0.900"); // plateau annotation
  });

  it("writes a prr svg from two input files", () => {
    const a = join(dir, "a.csv");
    const b = join(dir, "b.csv");
    const outPath = join(dir, "prr.svg");
    writeFileSync(a, PRR);
    writeFileSync(b, PRR.replace(/,1$/gm, ",3").replace(/,2$/gm, ",4"));
    const rc = main(["--kind", "prr", "--in", a, "--in", b, "--out", outPath]);
    expect(rc).toBe(0);
    expect(readFileSync(outPath, "utf8")).toContain("<polygon");
  });

  it("rejects a bad kind", () => {
    expect(main(["--kind", "pie", "--in", "x", "--out", "y"])).toBe(2);
  });

  it("requires input and output paths", () => {
    expect(main(["--kind", "cdf"])).toBe(2);
  });

  it("fails on a missing input file", () => {
    expect(main(["--kind", "cdf", "--in", join(dir, "nope.csv"), "--out", join(dir, "o.svg")])).toBe(1);
  });

  it("writes nothing when the csv is empty", () => {
    const inPath = join(dir, "empty.csv");
    const outPath = join(dir, "empty.svg");
    writeFileSync(inPath, "scheme,latency_ms,cum_frac\n");
    const rc = main(["--kind", "cdf", "--in", inPath, "--out", outPath]);
    expect(rc).toBe(1);
    expect(existsSync(outPath)).toBe(false);
  });

  it("prints usage with --help", () => {
    expect(main(["--help"])).toBe(0);
  });
});
