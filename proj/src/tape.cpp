#include "tloc/tape.hpp"

namespace tloc {

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kMul: return "mul";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kSoftmax: return "softmax";
    case Op::kConcat: return "concat";
    case Op::kMeanCols: return "mean_cols";
    case Op::kWeightedSum: return "weighted_sum";
    case Op::kSlice: return "slice";
    case Op::kLog: return "log";
    case Op::kSmoothL1: return "smooth_l1";
    case Op::kSum: return "sum";
  }
  return "?";
}

}  // namespace tloc
