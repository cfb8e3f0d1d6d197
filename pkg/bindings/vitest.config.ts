import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // every test shells out to the Python CLI, so allow for interpreter
    // start-up and first-use jit compilation
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
