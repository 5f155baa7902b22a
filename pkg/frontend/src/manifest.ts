/** Loader for the dataset manifest written by the ctisim toolkit. */

import * as fs from "fs";
import * as path from "path";

export interface Geometry {
  cube_side: number;
  shifts: number[];
  weight_mode: "unit" | "averaged";
  block_side: number;
  canvas_side: number;
}

export interface ManifestSample {
  id: number;
  category: string;
  scene_kind: string;
  split: string | null;
}

export interface Manifest {
  dir: string;
  geometry: Geometry;
  inputFormat: string;
  splitFiles: Record<string, string>;
  samples: ManifestSample[];
}

export function loadManifest(dir: string): Manifest {
  const file = path.join(dir, "manifest.json");
  const raw = JSON.parse(fs.readFileSync(file, "utf-8"));
  if (raw.format !== "ctisim-dataset") {
    throw new Error(`${file} is not a ctisim dataset manifest`);
  }
  if (raw.input_format !== "blocks") {
    throw new Error(
      `this reconstructor consumes the five-block input format, got ${raw.input_format}`,
    );
  }
  if (!raw.split_files) {
    throw new Error(`${file} has no split streams; export the dataset first`);
  }
  return {
    dir,
    geometry: raw.geometry as Geometry,
    inputFormat: raw.input_format,
    splitFiles: raw.split_files,
    samples: raw.samples.map((s: any) => ({
      id: s.id,
      category: s.category,
      scene_kind: s.scene_kind,
      split: s.split,
    })),
  };
}

export function splitRecordsPath(manifest: Manifest, split: string): string {
  const name = manifest.splitFiles[split];
  if (!name) throw new Error(`manifest has no ${split} stream`);
  return path.join(manifest.dir, name);
}
