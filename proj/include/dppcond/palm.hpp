#pragma once

#include "dppcond/kernel.hpp"

namespace dppcond {

enum class PalmMethod { Recursive, DetRatio };

// Kernel of the reduced Palm process at a set of conditioning points.
// degenerate means a conditioning determinant vanished; the matrix is then
// the zero kernel. Rows and columns at the conditioning points vanish.
struct PalmKernel {
  Configuration points;
  KernelMatrix matrix;
  bool degenerate = false;
};

PalmKernel palm_one(const KernelMatrix& k, int p);

// Recursive iterates palm_one point by point; DetRatio eliminates the whole
// conditioning block at once (Cholesky solve against the block, never an
// entrywise determinant ratio). The two agree up to round-off.
PalmKernel palm_many(const KernelMatrix& k, const Configuration& pts,
                     PalmMethod method = PalmMethod::DetRatio);

}  // namespace dppcond
