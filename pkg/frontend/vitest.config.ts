import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    globalSetup: "./tests/global-setup.ts",
    testTimeout: 20000,
    hookTimeout: 60000,
  },
});
