import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    proxy: {
      // the job service runs separately; proxy keeps the client same-origin in dev
      "/api": "http://127.0.0.1:8571",
    },
  },
  test: {
    environment: "jsdom",
  },
});
