#pragma once

// Small dense semidefinite programs in a standard conic form. Variables are
// real-symmetric / complex-Hermitian PSD blocks plus scalars; constraints are
// scalar linear rows (= or <=) and linear matrix inequalities. An LMI is
// modeled as a PSD slack block tied entrywise to an affine expression (one
// tie per independent parameter); the solver eliminates the ties structurally
// and reports a matrix dual per LMI. Complex blocks are lowered through the
// real_embed convention; functionals are expressed on the complex entries so
// no implicit trace-doubling ever reaches the caller.

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hjbeam/numerics.hpp"

namespace hjbeam {

// Sparse triplet dump [[r, c, re, im], ...] for self-describing problem JSON.
inline nlohmann::json cmatrix_to_json_sparse(const CMatrix& m) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != cd(0, 0)) a.push_back({i, j, m(i, j).real(), m(i, j).imag()});
  return a;
}

enum class VarSign { free_var, nonneg };
enum class Rel { eq, le };
enum class Sense { maximize, minimize };
enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

// Real-linear functional over scalar parameters.
struct LinExpr {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;

  LinExpr& add(int param, double coef) {
    if (coef != 0.0) terms.emplace_back(param, coef);
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o) {
    constant += o.constant;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
  LinExpr& operator*=(double c) {
    constant *= c;
    for (auto& t : terms) t.second *= c;
    return *this;
  }
  friend LinExpr operator*(double c, LinExpr e) {
    e *= c;
    return e;
  }
  friend LinExpr operator+(LinExpr a, const LinExpr& b) {
    a += b;
    return a;
  }
};

// Affine complex scalar in the real parameters.
struct AffineC {
  cd constant{0.0, 0.0};
  std::vector<std::pair<int, cd>> terms;

  AffineC() = default;
  explicit AffineC(cd c) : constant(c) {}
  AffineC& add(int param, cd coef) {
    if (coef != cd(0, 0)) terms.emplace_back(param, coef);
    return *this;
  }
  AffineC conj() const {
    AffineC r(std::conj(constant));
    for (const auto& [p, c] : terms) r.terms.emplace_back(p, std::conj(c));
    return r;
  }
  AffineC& operator+=(const AffineC& o) {
    constant += o.constant;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
  AffineC& operator*=(cd c) {
    constant *= c;
    for (auto& t : terms) t.second *= c;
    return *this;
  }
  friend AffineC operator*(cd c, AffineC e) {
    e *= c;
    return e;
  }
};

// Affine Hermitian-matrix-valued expression: c0 + sum_i u_i * coef[i].
struct AffineCMatrix {
  Eigen::Index dim = 0;
  CMatrix c0;
  std::map<int, CMatrix> coef;

  explicit AffineCMatrix(Eigen::Index d = 0) : dim(d), c0(CMatrix::Zero(d, d)) {}

  CMatrix& coef_of(int param) {
    auto it = coef.find(param);
    if (it == coef.end()) it = coef.emplace(param, CMatrix::Zero(dim, dim)).first;
    return it->second;
  }
  void add_const(Eigen::Index r, Eigen::Index c, cd v) {
    c0(r, c) += v;
    if (r != c) c0(c, r) += std::conj(v);
  }
  // Adds v at (r,c) and conj(v) at (c,r); pass r==c for diagonal terms.
  void add_term(int param, Eigen::Index r, Eigen::Index c, cd v) {
    CMatrix& m = coef_of(param);
    m(r, c) += v;
    if (r != c) m(c, r) += std::conj(v);
  }
  void add_entry(Eigen::Index r, Eigen::Index c, const AffineC& e) {
    add_const(r, c, e.constant);
    for (const auto& [p, v] : e.terms) add_term(p, r, c, v);
  }
  // Places sub (itself Hermitian-affine) as the diagonal block at (r0, r0).
  void insert_hermitian_block(Eigen::Index r0, const AffineCMatrix& sub) {
    c0.block(r0, r0, sub.dim, sub.dim) += sub.c0;
    for (const auto& [p, m] : sub.coef) coef_of(p).block(r0, r0, sub.dim, sub.dim) += m;
  }
  // Places an affine column vector block at rows [r0, r0+len) in column c,
  // mirroring its adjoint into row c.
  void insert_column(Eigen::Index r0, Eigen::Index c, Eigen::Index len,
                     const std::vector<AffineC>& col) {
    for (Eigen::Index i = 0; i < len; ++i) add_entry(r0 + i, c, col[i]);
  }
};

struct BlockId {
  int index = -1;
};

struct SdpSettings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-7;
  int max_iter = 120;
};

struct SdpResiduals {
  double primal = 0.0;  // worst relative cone/equality violation of the primal point
  double dual = 0.0;    // stationarity residual of the recovered multipliers
  double gap = 0.0;     // relative complementarity gap
};

struct SdpSolution {
  SolveStatus status = SolveStatus::numerical_failure;
  double objective = 0.0;
  double dual_objective = 0.0;
  std::map<std::string, CMatrix> herm_values;
  std::map<std::string, CMatrix> lmi_values;  // slack-block values M(u*)
  std::map<std::string, RMatrix> psd_values;
  std::map<std::string, double> scalar_values;
  std::map<std::string, double> constraint_duals;   // scalar rows; for <= rows these are >= 0
  std::map<std::string, double> nonneg_duals;       // multipliers of scalar sign constraints
  std::map<std::string, CMatrix> lmi_duals;         // Re tr(dual * M) convention
  std::map<std::string, CMatrix> herm_block_duals;  // dual slack of Hermitian variable blocks
  std::map<std::string, RMatrix> psd_block_duals;
  SdpResiduals residuals;
  int iterations = 0;
  double margin = 0.0;  // set by solve_feasibility_margin
};

class SdpProblem {
 public:
  // ---- variables ----
  // unit_scale declares the expected magnitude of the block; entries are
  // solved in normalized units and scaled back on recovery. Purely a
  // conditioning aid, the modeled variable is unchanged.
  BlockId add_psd_block(const std::string& name, int dim, double unit_scale = 1.0) {
    check_name(name);
    if (dim < 1) throw std::invalid_argument("add_psd_block: dim >= 1");
    if (unit_scale <= 0) throw std::invalid_argument("add_psd_block: unit_scale > 0");
    Block b;
    b.name = name;
    b.kind = Block::real_sym;
    b.cdim = dim;
    b.unit_scale = unit_scale;
    b.param_base = n_params_;
    n_params_ += dim * (dim + 1) / 2;
    blocks_.push_back(std::move(b));
    return {static_cast<int>(blocks_.size()) - 1};
  }

  // Complex Hermitian variable, lowered as one real PSD block of dimension
  // 2*cdim. Carries cdim^2 structural tie constraints (one per independent
  // redundancy of the embedding); those are enforced by parametrization.
  BlockId add_hermitian_block(const std::string& name, int cdim, double unit_scale = 1.0) {
    check_name(name);
    if (cdim < 1) throw std::invalid_argument("add_hermitian_block: dim >= 1");
    if (unit_scale <= 0) throw std::invalid_argument("add_hermitian_block: unit_scale > 0");
    Block b;
    b.name = name;
    b.kind = Block::hermitian;
    b.cdim = cdim;
    b.unit_scale = unit_scale;
    b.param_base = n_params_;
    n_params_ += cdim * cdim;
    blocks_.push_back(std::move(b));
    return {static_cast<int>(blocks_.size()) - 1};
  }

  int add_scalar(const std::string& name, VarSign sign, double unit_scale = 1.0) {
    check_name(name);
    if (unit_scale <= 0) throw std::invalid_argument("add_scalar: unit_scale > 0");
    Scalar s;
    s.name = name;
    s.sign = sign;
    s.unit_scale = unit_scale;
    s.param = n_params_++;
    scalar_scale_[s.param] = unit_scale;
    scalars_.push_back(std::move(s));
    return scalars_.back().param;
  }

  // ---- entry accessors / functionals ----
  // Hermitian block entry (i,j) as an affine complex scalar.
  AffineC herm_entry(BlockId b, int i, int j) const {
    const Block& blk = block(b);
    if (blk.kind != Block::hermitian) throw std::invalid_argument("herm_entry: wrong block kind");
    const int d = blk.cdim;
    AffineC e;
    const double s = blk.unit_scale;
    if (i == j) {
      e.add(blk.param_base + i, s);
    } else if (i < j) {
      const int off = pair_offset(d, i, j);
      e.add(blk.param_base + d + 2 * off, s);
      e.add(blk.param_base + d + 2 * off + 1, cd(0, s));
    } else {
      e = herm_entry(b, j, i).conj();
    }
    return e;
  }

  // Re tr(A * X) for Hermitian A over a Hermitian block: exact, no embedding
  // factors.
  LinExpr tr_herm(BlockId b, const CMatrix& a) const {
    const Block& blk = block(b);
    if (blk.kind != Block::hermitian) throw std::invalid_argument("tr_herm: wrong block kind");
    const int d = blk.cdim;
    if (a.rows() != d || a.cols() != d) throw std::invalid_argument("tr_herm: size mismatch");
    LinExpr e;
    const double sc = blk.unit_scale;
    for (int i = 0; i < d; ++i) e.add(blk.param_base + i, sc * a(i, i).real());
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        const int off = pair_offset(d, i, j);
        e.add(blk.param_base + d + 2 * off, 2.0 * sc * a(i, j).real());
        e.add(blk.param_base + d + 2 * off + 1, 2.0 * sc * a(i, j).imag());
      }
    return e;
  }

  LinExpr tr_psd(BlockId b, const RMatrix& a) const {
    const Block& blk = block(b);
    if (blk.kind != Block::real_sym) throw std::invalid_argument("tr_psd: wrong block kind");
    const int d = blk.cdim;
    LinExpr e;
    const double sc = blk.unit_scale;
    int p = blk.param_base;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j, ++p) e.add(p, sc * (i == j ? a(i, i) : 2.0 * a(i, j)));
    return e;
  }

  LinExpr trace_of(BlockId b) const {
    const Block& blk = block(b);
    if (blk.kind == Block::hermitian) return tr_herm(b, CMatrix::Identity(blk.cdim, blk.cdim));
    return tr_psd(b, RMatrix::Identity(blk.cdim, blk.cdim));
  }

  LinExpr scalar_expr(int param, double coef = 1.0) const {
    LinExpr e;
    auto it = scalar_scale_.find(param);
    e.add(param, coef * (it == scalar_scale_.end() ? 1.0 : it->second));
    return e;
  }

  // ---- constraints / objective ----
  void add_constraint(const std::string& name, LinExpr e, Rel rel, double rhs) {
    check_name(name);
    constraints_.push_back({name, std::move(e), rel, rhs});
  }

  // PSD slack block tied entrywise to the affine matrix m (dim^2 ties).
  int add_lmi(const std::string& name, AffineCMatrix m) {
    check_name(name);
    const double scale = std::max(max_abs(m.c0), 1e-300);
    if (!is_hermitian(m.c0, 1e-9))
      throw std::invalid_argument("add_lmi: constant part not Hermitian: " + name);
    for (auto& [p, c] : m.coef) {
      (void)p;
      if ((c - c.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * std::max(max_abs(c), scale))
        throw std::invalid_argument("add_lmi: coefficient not Hermitian: " + name);
      c = hermitian_part(c);
    }
    m.c0 = hermitian_part(m.c0);
    lmis_.push_back({name, std::move(m)});
    return static_cast<int>(lmis_.size()) - 1;
  }

  void set_objective(Sense sense, LinExpr e) {
    sense_ = sense;
    objective_ = std::move(e);
  }

  // ---- census ----
  int num_params() const { return n_params_; }
  int num_shaping_constraints() const { return static_cast<int>(constraints_.size()); }
  int num_lmi_constraints() const { return static_cast<int>(lmis_.size()); }
  int num_variable_blocks() const { return static_cast<int>(blocks_.size()); }
  int num_scalar_vars() const { return static_cast<int>(scalars_.size()); }
  int hermitian_structure_constraints(BlockId b) const {
    const Block& blk = block(b);
    return blk.kind == Block::hermitian ? blk.cdim * blk.cdim : 0;
  }
  std::vector<std::pair<std::string, int>> block_census() const {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& b : blocks_) out.emplace_back(b.name, b.cdim);
    for (const auto& l : lmis_) out.emplace_back(l.name, static_cast<int>(l.expr.dim));
    return out;
  }
  std::vector<std::string> scalar_census() const {
    std::vector<std::string> out;
    for (const auto& s : scalars_) out.push_back(s.name);
    return out;
  }

  nlohmann::json dump_json() const;

 private:
  friend struct LoweredProblem;
  friend class IpmSolver;

  struct Block {
    std::string name;
    enum Kind { real_sym, hermitian } kind = real_sym;
    int cdim = 0;
    int param_base = 0;
    double unit_scale = 1.0;
  };
  struct Scalar {
    std::string name;
    VarSign sign = VarSign::free_var;
    int param = 0;
    double unit_scale = 1.0;
  };
  struct Constraint {
    std::string name;
    LinExpr expr;
    Rel rel = Rel::le;
    double rhs = 0.0;
  };
  struct Lmi {
    std::string name;
    AffineCMatrix expr;
  };

  static int pair_offset(int d, int i, int j) {
    // position of (i,j), i<j, in row-major upper-triangle enumeration
    return i * d - i * (i + 1) / 2 + (j - i - 1);
  }
  const Block& block(BlockId b) const { return blocks_.at(b.index); }
  void check_name(const std::string& name) {
    if (!used_names_.insert(name).second)
      throw std::invalid_argument("duplicate name: " + name);
  }

  std::vector<Block> blocks_;
  std::vector<Scalar> scalars_;
  std::map<int, double> scalar_scale_;
  std::vector<Constraint> constraints_;
  std::vector<Lmi> lmis_;
  LinExpr objective_;
  Sense sense_ = Sense::maximize;
  int n_params_ = 0;
  std::set<std::string> used_names_;
};

inline nlohmann::json SdpProblem::dump_json() const {
  nlohmann::json j;
  j["sense"] = sense_ == Sense::maximize ? "maximize" : "minimize";
  j["num_params"] = n_params_;
  j["blocks"] = nlohmann::json::array();
  for (const auto& b : blocks_)
    j["blocks"].push_back({{"name", b.name},
                           {"kind", b.kind == Block::hermitian ? "hermitian" : "real_sym"},
                           {"dim", b.cdim},
                           {"param_base", b.param_base}});
  j["scalars"] = nlohmann::json::array();
  for (const auto& s : scalars_)
    j["scalars"].push_back({{"name", s.name},
                            {"sign", s.sign == VarSign::nonneg ? "nonneg" : "free"},
                            {"param", s.param}});
  auto expr_json = [](const LinExpr& e) {
    nlohmann::json out;
    out["constant"] = e.constant;
    out["terms"] = nlohmann::json::array();
    for (const auto& [p, c] : e.terms) out["terms"].push_back({p, c});
    return out;
  };
  j["objective"] = expr_json(objective_);
  j["constraints"] = nlohmann::json::array();
  for (const auto& c : constraints_)
    j["constraints"].push_back({{"name", c.name},
                                {"rel", c.rel == Rel::eq ? "eq" : "le"},
                                {"rhs", c.rhs},
                                {"expr", expr_json(c.expr)}});
  j["lmis"] = nlohmann::json::array();
  for (const auto& l : lmis_) {
    nlohmann::json lj;
    lj["name"] = l.name;
    lj["dim"] = l.expr.dim;
    lj["c0"] = cmatrix_to_json_sparse(l.expr.c0);
    lj["coef"] = nlohmann::json::array();
    for (const auto& [p, m] : l.expr.coef)
      lj["coef"].push_back({{"param", p}, {"matrix", cmatrix_to_json_sparse(m)}});
    j["lmis"].push_back(lj);
  }
  return j;
}

}  // namespace hjbeam

#include "hjbeam/sdp_solver.hpp"
