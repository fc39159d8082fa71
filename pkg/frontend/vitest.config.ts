import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // the ui-loop test spawns the python server and waits for readiness
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
