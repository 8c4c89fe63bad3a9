#ifndef FRAGSLEUTH_H
#define FRAGSLEUTH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bytes per fragment accepted by the prediction and test entry points.
 */
#define FS_FRAGMENT_SIZE 4096

/**
 * Number of tests in the randomness suite.
 */
#define FS_NUM_TESTS 15

typedef enum FsStatus {
  FS_STATUS_OK = 0,
  FS_STATUS_NULL_POINTER = 1,
  FS_STATUS_INVALID_ARGUMENT = 2,
  FS_STATUS_IO = 3,
  FS_STATUS_BAD_MODEL = 4,
  FS_STATUS_BUFFER_TOO_SMALL = 5,
  FS_STATUS_INTERNAL = 6,
} FsStatus;

/**
 * Per-test outcome: 0 pass, 1 fail, 2 preconditions not met.
 */
typedef enum FsVerdict {
  FS_VERDICT_PASS = 0,
  FS_VERDICT_FAIL = 1,
  FS_VERDICT_INAPPLICABLE = 2,
} FsVerdict;

/**
 * Loaded classifier.
 */
typedef struct FsModel FsModel;

typedef struct FsTestOutcome {
  /**
   * Smallest p-value the test produced; NaN when inapplicable.
   */
  double min_p;
  enum FsVerdict verdict;
} FsTestOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or an empty
 * string. The pointer stays valid until the next failing call on the thread.
 */
const char *fs_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fs_version(void);

/**
 * Loads a checkpoint from `path` into `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FsStatus fs_model_load(const char *path, struct FsModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from [`fs_model_load`] and not be used afterwards.
 */
void fs_model_free(struct FsModel *model);

/**
 * Number of classes the model distinguishes; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t fs_model_num_classes(const struct FsModel *model);

/**
 * Name of class `index`, owned by the model; null if out of range.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
const char *fs_model_class_name(const struct FsModel *model, size_t index);

/**
 * Classifies one fragment of exactly [`FS_FRAGMENT_SIZE`] bytes. Writes the
 * winning class index to `*label` and, when `probabilities` is non-null,
 * `capacity` (at least the class count) probabilities.
 *
 * # Safety
 * `data` must point to `len` readable bytes, `label` must be valid, and
 * `probabilities` null or writable for `capacity` floats.
 */
enum FsStatus fs_model_predict(const struct FsModel *model,
                               const uint8_t *data,
                               size_t len,
                               size_t *label,
                               float *probabilities,
                               size_t capacity);

/**
 * Name of test `index` in suite order; null if out of range.
 */
const char *fs_test_name(size_t index);

/**
 * Runs the randomness suite on one fragment of exactly
 * [`FS_FRAGMENT_SIZE`] bytes, writing [`FS_NUM_TESTS`] outcomes in
 * [`fs_test_name`] order. `paper_mode` nonzero selects the relaxed
 * applicability rules.
 *
 * # Safety
 * `data` must point to `len` readable bytes and `out` to `capacity`
 * writable outcomes.
 */
enum FsStatus fs_sts_run(const uint8_t *data,
                         size_t len,
                         int32_t paper_mode,
                         struct FsTestOutcome *out,
                         size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRAGSLEUTH_H */
