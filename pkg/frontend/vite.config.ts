import { defineConfig } from "vitest/config";

// The dev server proxies /api to a locally running `kzb serve` instance so the
// UI can be developed against the real backend without CORS ceremony.
export default defineConfig({
  build: {
    outDir: "dist",
    sourcemap: true,
  },
  server: {
    proxy: {
      "/api": "http://127.0.0.1:8765",
    },
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
  },
});
