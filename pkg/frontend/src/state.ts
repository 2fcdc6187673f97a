// Wizard form models, client-side validation, and the exact JSON payloads
// the config endpoint expects. Pure functions; the DOM layer stays thin.

export type Step = "zotero" | "openai" | "chat";

export interface ZoteroForm {
  libraryType: "user" | "group";
  apiKey: string;
  libraryId: string;
  useCollection: boolean;
  collectionId: string;
}

export interface OpenAIForm {
  apiKey: string;
  chunkSize: string;
  chunkOverlap: string;
  model: string;
}

export type FieldErrors = Record<string, string>;

const DIGITS_ONLY = /^[0-9]+$/;
const COLLECTION_ID = /^[A-Za-z0-9]+$/;

// savedKey: the server already holds a key for this section, so an empty
// field means "keep the stored one" rather than "missing".
export function validateZotero(form: ZoteroForm, savedKey: boolean): FieldErrors {
  const errors: FieldErrors = {};
  if (!form.apiKey && !savedKey) {
    errors.apiKey = "enter your Zotero API key";
  }
  if (!form.libraryId) {
    errors.libraryId = "enter your UserID or GroupID";
  } else if (!DIGITS_ONLY.test(form.libraryId)) {
    errors.libraryId = "the ID must contain digits only";
  }
  if (form.useCollection) {
    if (!form.collectionId) {
      errors.collectionId = "enter a collection ID, or select No";
    } else if (!COLLECTION_ID.test(form.collectionId)) {
      errors.collectionId = "collection IDs contain only letters and digits";
    }
  }
  return errors;
}

export function validateOpenai(form: OpenAIForm, savedKey: boolean): FieldErrors {
  const errors: FieldErrors = {};
  if (!form.apiKey && !savedKey) {
    errors.apiKey = "enter your OpenAI API key";
  }
  const size = parsePositiveInt(form.chunkSize);
  if (size === null) {
    errors.chunkSize = "chunk size must be a positive whole number";
  }
  const overlap = parseNonNegativeInt(form.chunkOverlap);
  if (overlap === null) {
    errors.chunkOverlap = "chunk overlap must be a whole number of 0 or more";
  } else if (size !== null && overlap >= size) {
    errors.chunkOverlap = "chunk overlap must be smaller than chunk size";
  }
  return errors;
}

// An empty api_key keeps the server's stored secret (placeholder semantics);
// an empty collection_id clears any previously configured collection.
export function zoteroPayload(form: ZoteroForm): object {
  return {
    validate_zotero: true,
    zotero: {
      library_type: form.libraryType,
      library_id: form.libraryId,
      api_key: form.apiKey,
      collection_id: form.useCollection ? form.collectionId : "",
    },
  };
}

export function openaiPayload(form: OpenAIForm): object {
  return {
    provider: {
      api_key: form.apiKey,
      chat_model: form.model,
    },
    chunking: {
      chunk_size: parsePositiveInt(form.chunkSize),
      chunk_overlap: parseNonNegativeInt(form.chunkOverlap),
    },
  };
}

export function splitChunkId(chunkId: string): { doc: string; chunk: string } {
  const at = chunkId.lastIndexOf("#");
  if (at <= 0) {
    return { doc: chunkId, chunk: "" };
  }
  return { doc: chunkId.slice(0, at), chunk: chunkId.slice(at + 1) };
}

function parsePositiveInt(raw: string): number | null {
  const value = parseIntStrict(raw);
  return value !== null && value > 0 ? value : null;
}

function parseNonNegativeInt(raw: string): number | null {
  const value = parseIntStrict(raw);
  return value !== null && value >= 0 ? value : null;
}

function parseIntStrict(raw: string): number | null {
  const text = raw.trim();
  if (!DIGITS_ONLY.test(text)) {
    return null;
  }
  return Number.parseInt(text, 10);
}
