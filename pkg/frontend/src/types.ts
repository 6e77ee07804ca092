// Payload shapes of the engine's review/status API.

export type Bbox = [number, number, number, number];

export interface FlaggedAttribute {
  section_id: string;
  class_name: string;
  name: string;
  value_kind: "string" | "number" | "date" | "list-of-records";
  value: unknown;
  confidence: number | null;
  justification: string | null;
  bbox: Bbox | null;
  section_text: string;
  image_refs: string[];
}

export interface QueueItem {
  job_id: string;
  packet_id: string;
  created_at: number;
  threshold: number;
  flagged: FlaggedAttribute[];
}

export interface JobStatus {
  job_id: string;
  packet_id: string;
  stage: string;
  attempts: Record<string, number>;
  completed_stages: string[];
  error_log: string[];
  routing: { outcome: string; trigger_attributes: unknown[] } | null;
  review: Record<string, unknown> | null;
}

export interface OcrLine {
  text: string;
  confidence: number;
  bbox: Bbox;
}

export interface OcrPage {
  index: number;
  lines: OcrLine[];
  image_ref?: string;
}

export interface BioLabel {
  tag: "B" | "I" | "O";
  class_name: string;
}

export interface SectionInfo {
  section_id: string;
  class_name: string;
  page_indices: number[];
}

export interface ExtractedAttribute {
  name: string;
  value: unknown;
  confidence: number;
  provenance: string;
  justification?: string | null;
  bbox?: Bbox | null;
}

export interface ExtractionEntry {
  section_id: string;
  class_name: string;
  status: "ok" | "failed";
  attributes: ExtractedAttribute[];
  failure_reason: string | null;
  attempts: number;
  raw_response: string | null;
}

export interface ConfidenceEntry {
  name: string;
  confidence: number;
  flagged: boolean;
  justification: string | null;
}

export interface ConfidenceReport {
  section_id: string;
  entries: ConfidenceEntry[];
  ocr_summary: { min: number; mean: number };
  min_attribute_confidence: number;
}

export interface Determination {
  rule_id: string;
  status: "pass" | "fail" | "information_not_found";
  reasoning: string;
  recommendations: string[];
  evidence: { fact_name: string; value: unknown; source: [string, string] }[];
}

export interface Intermediates {
  job_id: string;
  stage: string;
  ocr: OcrPage[] | null;
  bio_labels: BioLabel[] | null;
  sections: SectionInfo[] | null;
  extraction: ExtractionEntry[] | null;
  raw_outputs: { section_id: string; raw_response: string | null }[] | null;
  confidence: ConfidenceReport[] | null;
  determinations: Determination[] | null;
  error_log: string[];
}

export interface ReviewActionPayload {
  section_id: string;
  name: string;
  action: "accept" | "override";
  value?: unknown;
}

export interface ReviewResponse {
  status: string;
  stage: string;
}
