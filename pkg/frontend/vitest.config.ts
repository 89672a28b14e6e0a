import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    testTimeout: 900_000,
    hookTimeout: 300_000,
    // Training tests are CPU-bound; running files in parallel only slows
    // them down and makes timings flaky.
    fileParallelism: false,
  },
});
