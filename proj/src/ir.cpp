#include "hjlc/ir.hpp"

namespace hjl::ir {

Layer layer_of(OpKind k) {
  switch (k) {
    case OpKind::TensorEmpty:
    case OpKind::TensorFromElements:
    case OpKind::TensorExtract:
    case OpKind::TensorInsert:
    case OpKind::TensorMatmul:
    case OpKind::TensorTranspose:
      return Layer::Tensor;
    case OpKind::ScfFor:
    case OpKind::ScfIf:
    case OpKind::ScfYield:
      return Layer::Scf;
    case OpKind::ArithConst:
    case OpKind::ArithAdd:
    case OpKind::ArithSub:
    case OpKind::ArithMul:
    case OpKind::ArithShl:
    case OpKind::ArithShr:
    case OpKind::ArithCmp:
    case OpKind::ArithSelect:
    case OpKind::ArithCast:
    case OpKind::ArithFixedRescale:
      return Layer::Arith;
    case OpKind::BufAlloc:
    case OpKind::BufLoad:
    case OpKind::BufStore:
    case OpKind::BufCopy:
    case OpKind::BufDealloc:
      return Layer::Buffer;
    case OpKind::CfgBr:
    case OpKind::CfgCondBr:
      return Layer::Cfg;
    case OpKind::FuncCall:
    case OpKind::FuncReturn:
      return Layer::Func;
  }
  return Layer::Func;
}

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::TensorEmpty: return "tensor.empty";
    case OpKind::TensorFromElements: return "tensor.from_elements";
    case OpKind::TensorExtract: return "tensor.extract";
    case OpKind::TensorInsert: return "tensor.insert";
    case OpKind::TensorMatmul: return "tensor.matmul";
    case OpKind::TensorTranspose: return "tensor.transpose";
    case OpKind::ScfFor: return "scf.for";
    case OpKind::ScfIf: return "scf.if";
    case OpKind::ScfYield: return "scf.yield";
    case OpKind::ArithConst: return "arith.const";
    case OpKind::ArithAdd: return "arith.add";
    case OpKind::ArithSub: return "arith.sub";
    case OpKind::ArithMul: return "arith.mul";
    case OpKind::ArithShl: return "arith.shl";
    case OpKind::ArithShr: return "arith.shr";
    case OpKind::ArithCmp: return "arith.cmp";
    case OpKind::ArithSelect: return "arith.select";
    case OpKind::ArithCast: return "arith.cast";
    case OpKind::ArithFixedRescale: return "arith.fixed_rescale";
    case OpKind::BufAlloc: return "buffer.alloc";
    case OpKind::BufLoad: return "buffer.load";
    case OpKind::BufStore: return "buffer.store";
    case OpKind::BufCopy: return "buffer.copy";
    case OpKind::BufDealloc: return "buffer.dealloc";
    case OpKind::CfgBr: return "cfg.br";
    case OpKind::CfgCondBr: return "cfg.cond_br";
    case OpKind::FuncCall: return "func.call";
    case OpKind::FuncReturn: return "func.return";
  }
  return "?";
}

const char* pred_name(CmpPred p) {
  switch (p) {
    case CmpPred::Lt: return "lt";
    case CmpPred::Gt: return "gt";
    case CmpPred::Le: return "le";
    case CmpPred::Ge: return "ge";
    case CmpPred::Eq: return "eq";
    case CmpPred::Ne: return "ne";
  }
  return "?";
}

}  // namespace hjl::ir
