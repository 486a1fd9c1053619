#include "jetcalc/series.hpp"

#include <cmath>

#include "jetcalc/error.hpp"

namespace jetcalc {

namespace {

enum class State : std::uint8_t { Ok, FlatZero, Error };

struct SlotInfo {
  State state = State::Ok;
  int origin = -1;
};

class SeriesEvaluator {
 public:
  SeriesEvaluator(const IndexTable& table, std::size_t slots)
      : t_(table), size_(table.size()), buf_(slots * table.size(), 0.0), info_(slots) {}

  double* at(int slot) { return buf_.data() + static_cast<std::size_t>(slot) * size_; }
  SlotInfo& info(int slot) { return info_[static_cast<std::size_t>(slot)]; }

  void mul(const double* a, const double* b, double* c) const {
    for (std::size_t r = 0; r < size_; ++r) {
      double s = 0.0;
      for (auto p = t_.pair_begin[r]; p < t_.pair_begin[r + 1]; ++p)
        s += t_.pair_binom[p] * a[t_.pair_j[p]] * b[t_.pair_rest[p]];
      c[r] = s;
    }
  }

  // c = a / b, b[0] != 0
  void div(const double* a, const double* b, double* c) const {
    for (std::size_t r = 0; r < size_; ++r) {
      double s = a[r];
      // first pair is J = 0
      for (auto p = t_.pair_begin[r] + 1; p < t_.pair_begin[r + 1]; ++p)
        s -= t_.pair_binom[p] * b[t_.pair_j[p]] * c[t_.pair_rest[p]];
      c[r] = s / b[0];
    }
  }

  void exp(const double* a, double* e) const {
    e[0] = std::exp(a[0]);
    for (std::size_t r = 1; r < size_; ++r) {
      double s = 0.0;
      for (auto p = t_.pair_begin[r]; p < t_.pair_begin[r + 1]; ++p) {
        const double w = t_.pivot_weight[p];
        if (w != 0.0) s += w * a[t_.pair_j[p]] * e[t_.pair_rest[p]];
      }
      e[r] = s;
    }
  }

  void sincos(const double* a, double* sn, double* cs) const {
    sn[0] = std::sin(a[0]);
    cs[0] = std::cos(a[0]);
    for (std::size_t r = 1; r < size_; ++r) {
      double s = 0.0, c = 0.0;
      for (auto p = t_.pair_begin[r]; p < t_.pair_begin[r + 1]; ++p) {
        const double w = t_.pivot_weight[p];
        if (w == 0.0) continue;
        s += w * a[t_.pair_j[p]] * cs[t_.pair_rest[p]];
        c -= w * a[t_.pair_j[p]] * sn[t_.pair_rest[p]];
      }
      sn[r] = s;
      cs[r] = c;
    }
  }

  void log(const double* a, double* l) const {
    l[0] = std::log(a[0]);
    for (std::size_t r = 1; r < size_; ++r) {
      double s = a[r];
      // last pair is J = I
      for (auto p = t_.pair_begin[r]; p + 1 < t_.pair_begin[r + 1]; ++p) {
        const double w = t_.pivot_weight[p];
        if (w != 0.0) s -= w * l[t_.pair_j[p]] * a[t_.pair_rest[p]];
      }
      l[r] = s / a[0];
    }
  }

 private:
  const IndexTable& t_;
  std::size_t size_;
  std::vector<double> buf_;
  std::vector<SlotInfo> info_;
};

bool all_finite(const double* c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(c[i])) return false;
  return true;
}

}  // namespace

std::vector<double> derivative_coefficients(const Program& program, std::span<const double> base, int m,
                                        std::optional<double> t) {
  const int n = static_cast<int>(base.size());
  if (n < 1) throw PreconditionError("expansion point must have dimension >= 1");
  if (program.dimension() > n)
    throw PreconditionError("expansion point has dimension " + std::to_string(n) + " but expression uses x" +
                            std::to_string(program.dimension()));
  if (program.has_parameter() && !t) throw PreconditionError("expression depends on t but no parameter value given");
  if (program.has_jet_coordinates()) throw PreconditionError("jet coordinates cannot be prolonged");
  if (m < 0) throw PreconditionError("order must be non-negative");

  const auto table = index_table(n, m);
  const std::size_t size = table->size();
  const auto& code = program.instructions();
  SeriesEvaluator ev(*table, code.size());
  std::vector<double> scratch(size), scratch2(size);

  for (std::size_t i = 0; i < code.size(); ++i) {
    const auto& ins = code[i];
    const int self = static_cast<int>(i);
    double* out = ev.at(self);
    SlotInfo& info = ev.info(self);
    auto err = [&](int origin) {
      info.state = State::Error;
      info.origin = origin;
    };
    auto flat_zero = [&] {
      info.state = State::FlatZero;
      std::fill(out, out + size, 0.0);
    };

    switch (ins.kind) {
      case NodeKind::Constant:
        out[0] = ins.value;
        break;
      case NodeKind::Variable:
        out[0] = base[static_cast<std::size_t>(ins.index)];
        if (m >= 1) out[table->raise[static_cast<std::size_t>(ins.index)]] = 1.0;
        break;
      case NodeKind::Parameter:
        out[0] = *t;
        break;
      case NodeKind::JetCoord:
        throw PreconditionError("jet coordinates cannot be prolonged");
      case NodeKind::Neg: {
        info = ev.info(ins.a);
        const double* a = ev.at(ins.a);
        for (std::size_t r = 0; r < size; ++r) out[r] = -a[r];
        break;
      }
      case NodeKind::Add:
      case NodeKind::Sub: {
        const SlotInfo ia = ev.info(ins.a), ib = ev.info(ins.b);
        if (ia.state == State::Error) err(ia.origin);
        else if (ib.state == State::Error) err(ib.origin);
        else if (ia.state == State::FlatZero && ib.state == State::FlatZero) flat_zero();
        else {
          const double* a = ev.at(ins.a);
          const double* b = ev.at(ins.b);
          if (ins.kind == NodeKind::Add)
            for (std::size_t r = 0; r < size; ++r) out[r] = a[r] + b[r];
          else
            for (std::size_t r = 0; r < size; ++r) out[r] = a[r] - b[r];
        }
        break;
      }
      case NodeKind::Mul: {
        const SlotInfo ia = ev.info(ins.a), ib = ev.info(ins.b);
        if (ia.state == State::FlatZero || ib.state == State::FlatZero) flat_zero();
        else if (ia.state == State::Error) err(ia.origin);
        else if (ib.state == State::Error) err(ib.origin);
        else ev.mul(ev.at(ins.a), ev.at(ins.b), out);
        break;
      }
      case NodeKind::Div: {
        const SlotInfo ia = ev.info(ins.a), ib = ev.info(ins.b);
        if (ia.state == State::FlatZero) flat_zero();
        else if (ia.state == State::Error) err(ia.origin);
        else if (ib.state == State::Error) err(ib.origin);
        else if (ib.state == State::FlatZero || ev.at(ins.b)[0] == 0.0) err(self);
        else ev.div(ev.at(ins.a), ev.at(ins.b), out);
        break;
      }
      case NodeKind::Pow: {
        const SlotInfo ia = ev.info(ins.a);
        if (ia.state == State::Error) {
          err(ia.origin);
        } else if (ins.index == 0) {
          std::fill(out, out + size, 0.0);
          out[0] = 1.0;
        } else if (ia.state == State::FlatZero) {
          flat_zero();
        } else {
          const double* a = ev.at(ins.a);
          std::copy(a, a + size, out);
          for (int k = 1; k < ins.index; ++k) {
            ev.mul(out, a, scratch.data());
            std::copy(scratch.begin(), scratch.end(), out);
          }
        }
        break;
      }
      case NodeKind::Exp: {
        const SlotInfo ia = ev.info(ins.a);
        if (ia.state == State::Error) err(ia.origin);
        else ev.exp(ev.at(ins.a), out);
        break;
      }
      case NodeKind::Sin:
      case NodeKind::Cos: {
        const SlotInfo ia = ev.info(ins.a);
        if (ia.state == State::Error) {
          err(ia.origin);
        } else if (ins.kind == NodeKind::Sin) {
          ev.sincos(ev.at(ins.a), out, scratch.data());
        } else {
          ev.sincos(ev.at(ins.a), scratch.data(), out);
        }
        break;
      }
      case NodeKind::Log: {
        const SlotInfo ia = ev.info(ins.a);
        if (ia.state == State::Error) err(ia.origin);
        else if (ia.state == State::FlatZero || ev.at(ins.a)[0] <= 0.0) err(self);
        else ev.log(ev.at(ins.a), out);
        break;
      }
      case NodeKind::Flat: {
        const SlotInfo ia = ev.info(ins.a);
        const double* a = ev.at(ins.a);
        if (ia.state == State::Error) {
          err(ia.origin);
        } else if (ia.state == State::FlatZero || a[0] <= 0.0) {
          flat_zero();
        } else {
          // flat(u) = exp(w) with w = -1/u
          std::fill(scratch2.begin(), scratch2.end(), 0.0);
          scratch2[0] = -1.0;
          ev.div(scratch2.data(), a, scratch.data());
          ev.exp(scratch.data(), out);
          if (out[0] == 0.0) flat_zero();
        }
        break;
      }
    }
    if (info.state == State::Ok && !all_finite(out, size)) err(self);
  }

  const SlotInfo& root = ev.info(static_cast<int>(code.size()) - 1);
  if (root.state == State::Error) {
    const auto kind = code[static_cast<std::size_t>(root.origin)].kind;
    throw DomainError(kind == NodeKind::Div   ? "division by zero"
                      : kind == NodeKind::Log ? "log of non-positive argument"
                                              : "non-finite intermediate value");
  }
  const double* r = ev.at(static_cast<int>(code.size()) - 1);
  if (root.state == State::FlatZero) return std::vector<double>(size, 0.0);
  return std::vector<double>(r, r + size);
}

}  // namespace jetcalc
