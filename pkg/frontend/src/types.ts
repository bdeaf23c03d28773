export interface CandidateView {
  id: string;
  instruction: string;
  status: 'pending' | 'accepted' | 'rejected';
  task: string;
  color: [number, number, number];
  lease_reviewer: string | null;
  lease_expiry: number | null;
}

export interface CandidateAssets {
  id: string;
  instruction: string;
  status: string;
  input_png: string; // base64
  target_png: string;
  base_png?: string | null;
}

export interface PaletteColor {
  name: string;
  rgb: [number, number, number];
}

export interface StrokeDraft {
  points: [number, number][]; // image-pixel coordinates
  color: [number, number, number];
  thickness: number;
}

export interface ExportEntry {
  id: string;
  provenance: string;
  instruction: string;
  [key: string]: unknown;
}
