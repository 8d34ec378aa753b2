// SPDX-License-Identifier: Apache-2.0
#include "lsfem/assembly.hpp"

#include <omp.h>

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

#include "lsfem/errors.hpp"

namespace lsfem {

namespace detail {

struct BasisTables {
  const TriangleQuadrature* rule = nullptr;
  // Values and reference gradients for degrees 1..3 at the rule points,
  // indexed [q * npe + i].
  std::vector<double> values[3];
  std::vector<Vec2> ref_grads[3];

  void build(const TriangleQuadrature& r) {
    rule = &r;
    const int nq = r.size();
    if (nq > kMaxQ) throw ValidationError("quadrature degree too high for assembler scratch");
    for (int d = 1; d <= 3; ++d) {
      const ReferenceBasis& basis = reference_basis(d);
      values[d - 1].resize(static_cast<std::size_t>(nq) * basis.size);
      ref_grads[d - 1].resize(static_cast<std::size_t>(nq) * basis.size);
      for (int q = 0; q < nq; ++q) {
        basis.values(r.points[q], &values[d - 1][static_cast<std::size_t>(q) * basis.size]);
        basis.gradients(r.points[q], &ref_grads[d - 1][static_cast<std::size_t>(q) * basis.size]);
      }
    }
  }
};

struct ElemScratch {
  Vec2 xq[kMaxQ];
  double wq[kMaxQ];
  Mat2 jinvT;
  double h_e = 0.0;
  Vec2 phys_grads[3][kMaxQ * kMaxNpe];
  bool grads_ready[3] = {false, false, false};
};

}  // namespace detail

using detail::BasisTables;
using detail::ElemScratch;

const Vec2& ElemContext::x(int q) const { return scratch_->xq[q]; }
double ElemContext::weight(int q) const { return scratch_->wq[q]; }
double ElemContext::h_elem() const { return scratch_->h_e; }

namespace {

void prepare_scratch(const Mesh& mesh, int elem, const TriangleQuadrature& rule, ElemScratch& s) {
  const auto& tri = mesh.triangles[elem];
  const Vec2& a = mesh.vertices[tri[0]];
  const Vec2& b = mesh.vertices[tri[1]];
  const Vec2& c = mesh.vertices[tri[2]];
  const Mat2 J{b.x - a.x, c.x - a.x, b.y - a.y, c.y - a.y};
  const double detJ = J.det();
  s.jinvT = J.inverse().transpose();
  s.h_e = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
  const int nq = rule.size();
  for (int q = 0; q < nq; ++q) {
    s.xq[q] = a + J.apply(rule.points[q]);
    s.wq[q] = rule.weights[q] * detJ;
  }
  s.grads_ready[0] = s.grads_ready[1] = s.grads_ready[2] = false;
}

void ensure_grads(const BasisTables& tables, ElemScratch& s, int degree) {
  if (s.grads_ready[degree - 1]) return;
  const int npe = nodes_per_element(degree);
  const int nq = tables.rule->size();
  const auto& ref = tables.ref_grads[degree - 1];
  for (int k = 0; k < nq * npe; ++k) s.phys_grads[degree - 1][k] = s.jinvT.apply(ref[k]);
  s.grads_ready[degree - 1] = true;
}

}  // namespace

double ElemContext::value(const DiscreteField& f, int q, int comp) const {
  const int d = f.space->degree();
  const int npe = f.space->nodes_per_elem();
  const auto nodes = f.space->element_nodes(elem_);
  const double* v = &tables_->values[d - 1][static_cast<std::size_t>(q) * npe];
  double out = 0.0;
  for (int i = 0; i < npe; ++i) out += v[i] * f.coeffs[f.space->dof(nodes[i], comp)];
  return out;
}

Vec2 ElemContext::value2(const DiscreteField& f, int q) const {
  return {value(f, q, 0), value(f, q, 1)};
}

Vec2 ElemContext::grad(const DiscreteField& f, int q, int comp) const {
  const int d = f.space->degree();
  ensure_grads(*tables_, *scratch_, d);
  const int npe = f.space->nodes_per_elem();
  const auto nodes = f.space->element_nodes(elem_);
  const Vec2* g = &scratch_->phys_grads[d - 1][static_cast<std::size_t>(q) * npe];
  Vec2 out{0.0, 0.0};
  for (int i = 0; i < npe; ++i) out += g[i] * f.coeffs[f.space->dof(nodes[i], comp)];
  return out;
}

Mat2 ElemContext::grad2(const DiscreteField& f, int q) const {
  const Vec2 gx = grad(f, q, 0);
  const Vec2 gy = grad(f, q, 1);
  return {gx.x, gx.y, gy.x, gy.y};
}

const double* ElemContext::basis_values(int block, int q) const {
  const int d = (*blocks_)[block]->degree();
  return &tables_->values[d - 1][static_cast<std::size_t>(q) * nodes_per_element(d)];
}

const Vec2* ElemContext::basis_grads(int block, int q) const {
  const int d = (*blocks_)[block]->degree();
  ensure_grads(*tables_, *scratch_, d);
  return &scratch_->phys_grads[d - 1][static_cast<std::size_t>(q) * nodes_per_element(d)];
}

// ---------------------------------------------------------------------------

struct AssemblyPlan {
  std::vector<long> signature;
  Eigen::SparseMatrix<double> skeleton;  // compressed, values zero
  std::vector<int> scatter;              // per element, per pair entry -> CSC value slot
  std::vector<int> offsets;
};

struct SystemAssembler::Impl {
  std::vector<const FunctionSpace*> blocks;
  int quad_degree;
  ExecPolicy policy;
  const TriangleQuadrature* rule;
  BasisTables tables;
  std::vector<int> offsets;

  using PairKernel = std::function<void(const ElemContext&, double*)>;
  using RhsKernel = std::function<void(const ElemContext&, double*)>;
  struct PairItem {
    int row, col, nr, nc, buf_offset;
    PairKernel kernel;
  };
  struct RhsItem {
    int row, n, buf_offset;
    RhsKernel kernel;
  };
  std::vector<PairItem> pairs;
  std::vector<RhsItem> rhss;
  int pair_buf_size = 0;
  int rhs_buf_size = 0;

  const FunctionSpace& block(int b) const { return *blocks[b]; }
  int block_dim(int b) const { return block(b).nodes_per_elem() * block(b).components(); }

  PairItem& pair_slot(int row, int col) {
    for (auto& p : pairs)
      if (p.row == row && p.col == col) return p;
    PairItem item;
    item.row = row;
    item.col = col;
    item.nr = block_dim(row);
    item.nc = block_dim(col);
    item.buf_offset = pair_buf_size;
    pair_buf_size += item.nr * item.nc;
    pairs.push_back(std::move(item));
    return pairs.back();
  }

  void add_pair_kernel(int row, int col, PairKernel k) {
    PairItem& slot = pair_slot(row, col);
    if (!slot.kernel) {
      slot.kernel = std::move(k);
    } else {
      PairKernel prev = std::move(slot.kernel);
      slot.kernel = [prev = std::move(prev), next = std::move(k)](const ElemContext& ctx, double* buf) {
        prev(ctx, buf);
        next(ctx, buf);
      };
    }
  }

  void add_rhs_kernel(int row, RhsKernel k) {
    for (auto& r : rhss) {
      if (r.row == row) {
        RhsKernel prev = std::move(r.kernel);
        r.kernel = [prev = std::move(prev), next = std::move(k)](const ElemContext& ctx, double* buf) {
          prev(ctx, buf);
          next(ctx, buf);
        };
        return;
      }
    }
    RhsItem item;
    item.row = row;
    item.n = block_dim(row);
    item.buf_offset = rhs_buf_size;
    rhs_buf_size += item.n;
    item.kernel = std::move(k);
    rhss.push_back(std::move(item));
  }

  std::vector<long> signature() const {
    std::vector<long> sig{quad_degree};
    for (const auto* b : blocks) sig.push_back(b->n_dofs());
    sig.push_back(-1);
    for (const auto& p : pairs) {
      sig.push_back(p.row);
      sig.push_back(p.col);
    }
    sig.push_back(-2);
    for (const auto& r : rhss) sig.push_back(r.row);
    return sig;
  }
};

SystemAssembler::SystemAssembler(std::vector<const FunctionSpace*> blocks, int quadrature_degree,
                                 ExecPolicy policy, std::shared_ptr<AssemblyPlan> plan)
    : impl_(new Impl), plan_(std::move(plan)) {
  if (blocks.empty()) throw ValidationError("assembler: at least one block required");
  for (const auto* b : blocks)
    if (&b->mesh() != &blocks[0]->mesh())
      throw ValidationError("assembler: all block spaces must share one mesh");
  impl_->blocks = std::move(blocks);
  impl_->quad_degree = quadrature_degree;
  impl_->policy = policy;
  impl_->rule = &triangle_quadrature(quadrature_degree);
  impl_->tables.build(*impl_->rule);
  impl_->offsets.resize(impl_->blocks.size() + 1, 0);
  for (std::size_t b = 0; b < impl_->blocks.size(); ++b)
    impl_->offsets[b + 1] = impl_->offsets[b] + impl_->blocks[b]->n_dofs();
}

SystemAssembler::~SystemAssembler() = default;

void SystemAssembler::add_mass(int row, int col, ScalarCoeff c) {
  const int comps = impl_->block(row).components();
  if (comps != impl_->block(col).components())
    throw ValidationError("add_mass: component mismatch");
  const int npr = impl_->block(row).nodes_per_elem();
  const int npc = impl_->block(col).nodes_per_elem();
  const int nc = impl_->block_dim(col);
  impl_->add_pair_kernel(row, col, [=, c = std::move(c)](const ElemContext& ctx, double* buf) {
    for (int q = 0; q < ctx.nq(); ++q) {
      const double s = ctx.weight(q) * (c ? c(ctx, q) : 1.0);
      const double* vr = ctx.basis_values(row, q);
      const double* vc = ctx.basis_values(col, q);
      for (int i = 0; i < npr; ++i)
        for (int j = 0; j < npc; ++j) {
          const double m = s * vr[i] * vc[j];
          for (int a = 0; a < comps; ++a) buf[(i * comps + a) * nc + (j * comps + a)] += m;
        }
    }
  });
}

void SystemAssembler::add_stiffness(int row, int col, ScalarCoeff c) {
  const int comps = impl_->block(row).components();
  if (comps != impl_->block(col).components())
    throw ValidationError("add_stiffness: component mismatch");
  const int npr = impl_->block(row).nodes_per_elem();
  const int npc = impl_->block(col).nodes_per_elem();
  const int nc = impl_->block_dim(col);
  impl_->add_pair_kernel(row, col, [=, c = std::move(c)](const ElemContext& ctx, double* buf) {
    for (int q = 0; q < ctx.nq(); ++q) {
      const double s = ctx.weight(q) * (c ? c(ctx, q) : 1.0);
      const Vec2* gr = ctx.basis_grads(row, q);
      const Vec2* gc = ctx.basis_grads(col, q);
      for (int i = 0; i < npr; ++i)
        for (int j = 0; j < npc; ++j) {
          const double m = s * gr[i].dot(gc[j]);
          for (int a = 0; a < comps; ++a) buf[(i * comps + a) * nc + (j * comps + a)] += m;
        }
    }
  });
}

void SystemAssembler::add_sym_diffusion(int row, int col, ScalarCoeff nu) {
  if (impl_->block(row).components() != 2 || impl_->block(col).components() != 2)
    throw ValidationError("add_sym_diffusion: vector blocks required");
  const int npr = impl_->block(row).nodes_per_elem();
  const int npc = impl_->block(col).nodes_per_elem();
  const int nc = impl_->block_dim(col);
  impl_->add_pair_kernel(row, col, [=, nu = std::move(nu)](const ElemContext& ctx, double* buf) {
    for (int q = 0; q < ctx.nq(); ++q) {
      const double s = ctx.weight(q) * (nu ? nu(ctx, q) : 1.0);
      const Vec2* gr = ctx.basis_grads(row, q);
      const Vec2* gc = ctx.basis_grads(col, q);
      for (int i = 0; i < npr; ++i) {
        const double gi[2] = {gr[i].x, gr[i].y};
        for (int j = 0; j < npc; ++j) {
          const double gg = gr[i].dot(gc[j]);
          const double gj[2] = {gc[j].x, gc[j].y};
          // 2 D(N_j e_b) : D(N_i e_a) = delta_ab grad_i . grad_j + dj[a] di[b]
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              const double m = s * ((a == b ? gg : 0.0) + gj[a] * gi[b]);
              buf[(i * 2 + a) * nc + (j * 2 + b)] += m;
            }
        }
      }
    }
  });
}

void SystemAssembler::add_advection(int row, int col, const DiscreteField& beta, ScalarCoeff c) {
  const int comps = impl_->block(row).components();
  if (comps != impl_->block(col).components())
    throw ValidationError("add_advection: component mismatch");
  const int npr = impl_->block(row).nodes_per_elem();
  const int npc = impl_->block(col).nodes_per_elem();
  const int nc = impl_->block_dim(col);
  const DiscreteField* b = &beta;
  impl_->add_pair_kernel(row, col, [=, c = std::move(c)](const ElemContext& ctx, double* buf) {
    for (int q = 0; q < ctx.nq(); ++q) {
      const double s = ctx.weight(q) * (c ? c(ctx, q) : 1.0);
      const Vec2 u = ctx.value2(*b, q);
      const double* vr = ctx.basis_values(row, q);
      const Vec2* gc = ctx.basis_grads(col, q);
      for (int i = 0; i < npr; ++i)
        for (int j = 0; j < npc; ++j) {
          const double m = s * vr[i] * u.dot(gc[j]);
          for (int a = 0; a < comps; ++a) buf[(i * comps + a) * nc + (j * comps + a)] += m;
        }
    }
  });
}

void SystemAssembler::add_div_coupling(int u_block, int p_block) {
  if (impl_->block(u_block).components() != 2 || impl_->block(p_block).components() != 1)
    throw ValidationError("add_div_coupling: (vector, scalar) blocks required");
  const int npu = impl_->block(u_block).nodes_per_elem();
  const int npp = impl_->block(p_block).nodes_per_elem();
  const int ncp = impl_->block_dim(p_block);
  const int ncu = impl_->block_dim(u_block);
  // -int p div(v)
  impl_->add_pair_kernel(u_block, p_block, [=](const ElemContext& ctx, double* buf) {
    for (int q = 0; q < ctx.nq(); ++q) {
      const double s = ctx.weight(q);
      const Vec2* gu = ctx.basis_grads(u_block, q);
      const double* vp = ctx.basis_values(p_block, q);
      for (int i = 0; i < npu; ++i) {
        const double gi[2] = {gu[i].x, gu[i].y};
        for (int j = 0; j < npp; ++j)
          for (int a = 0; a < 2; ++a) buf[(i * 2 + a) * ncp + j] -= s * vp[j] * gi[a];
      }
    }
  });
  // +int q div(u)
  impl_->add_pair_kernel(p_block, u_block, [=](const ElemContext& ctx, double* buf) {
    for (int q = 0; q < ctx.nq(); ++q) {
      const double s = ctx.weight(q);
      const Vec2* gu = ctx.basis_grads(u_block, q);
      const double* vp = ctx.basis_values(p_block, q);
      for (int j = 0; j < npu; ++j) {
        const double gj[2] = {gu[j].x, gu[j].y};
        for (int i = 0; i < npp; ++i)
          for (int b = 0; b < 2; ++b) buf[i * ncu + (j * 2 + b)] += s * vp[i] * gj[b];
      }
    }
  });
}

void SystemAssembler::add_surface_div_coupling(int u_block, int lambda_block,
                                               const DiscreteField& normal, ScalarCoeff weight) {
  if (impl_->block(u_block).components() != 2 || impl_->block(lambda_block).components() != 1)
    throw ValidationError("add_surface_div_coupling: (vector, scalar) blocks required");
  const int npu = impl_->block(u_block).nodes_per_elem();
  const int npl = impl_->block(lambda_block).nodes_per_elem();
  const int ncl = impl_->block_dim(lambda_block);
  const int ncu = impl_->block_dim(u_block);
  const DiscreteField* nf = &normal;

  auto surface_div = [](const Vec2& n, const Vec2& g, int a) {
    // grad_s . (N e_a) = dN/dx_a - n_a (n . grad N)
    const double ndotg = n.x * g.x + n.y * g.y;
    return (a == 0 ? g.x - n.x * ndotg : g.y - n.y * ndotg);
  };

  impl_->add_pair_kernel(u_block, lambda_block,
                         [=, w = weight](const ElemContext& ctx, double* buf) {
    for (int q = 0; q < ctx.nq(); ++q) {
      const double s = ctx.weight(q) * w(ctx, q);
      if (s == 0.0) continue;
      Vec2 n = ctx.value2(*nf, q);
      const double nn = n.norm();
      if (nn > 1e-12) n = n / nn;
      const Vec2* gu = ctx.basis_grads(u_block, q);
      const double* vl = ctx.basis_values(lambda_block, q);
      for (int i = 0; i < npu; ++i)
        for (int a = 0; a < 2; ++a) {
          const double sd = surface_div(n, gu[i], a);
          for (int j = 0; j < npl; ++j) buf[(i * 2 + a) * ncl + j] += s * vl[j] * sd;
        }
    }
  });
  impl_->add_pair_kernel(lambda_block, u_block,
                         [=, w = std::move(weight)](const ElemContext& ctx, double* buf) {
    for (int q = 0; q < ctx.nq(); ++q) {
      const double s = ctx.weight(q) * w(ctx, q);
      if (s == 0.0) continue;
      Vec2 n = ctx.value2(*nf, q);
      const double nn = n.norm();
      if (nn > 1e-12) n = n / nn;
      const Vec2* gu = ctx.basis_grads(u_block, q);
      const double* vl = ctx.basis_values(lambda_block, q);
      for (int j = 0; j < npu; ++j)
        for (int b = 0; b < 2; ++b) {
          const double sd = surface_div(n, gu[j], b);
          for (int i = 0; i < npl; ++i) buf[i * ncu + (j * 2 + b)] += s * vl[i] * sd;
        }
    }
  });
}

void SystemAssembler::add_supg_advection_cn(int block, const DiscreteField& velocity,
                                            const DiscreteField& phi_n, double dt,
                                            double stab_coeff) {
  if (impl_->block(block).components() != 1)
    throw ValidationError("add_supg_advection_cn: scalar block required");
  const int np = impl_->block(block).nodes_per_elem();
  const DiscreteField* u = &velocity;
  const DiscreteField* phi = &phi_n;

  auto tau_of = [stab_coeff](const ElemContext& ctx, const DiscreteField& vel) {
    double mean_speed = 0.0;
    for (int q = 0; q < ctx.nq(); ++q) mean_speed += ctx.value2(vel, q).norm();
    mean_speed /= ctx.nq();
    return stab_coeff * ctx.h_elem() / (2.0 * mean_speed + 1e-12);
  };

  impl_->add_pair_kernel(block, block, [=](const ElemContext& ctx, double* buf) {
    const double tau = tau_of(ctx, *u);
    for (int q = 0; q < ctx.nq(); ++q) {
      const double s = ctx.weight(q);
      const Vec2 uq = ctx.value2(*u, q);
      const double* v = ctx.basis_values(block, q);
      const Vec2* g = ctx.basis_grads(block, q);
      for (int i = 0; i < np; ++i) {
        const double test = v[i] + tau * uq.dot(g[i]);
        for (int j = 0; j < np; ++j)
          buf[i * np + j] += s * test * (v[j] / dt + 0.5 * uq.dot(g[j]));
      }
    }
  });
  impl_->add_rhs_kernel(block, [=](const ElemContext& ctx, double* buf) {
    const double tau = tau_of(ctx, *u);
    for (int q = 0; q < ctx.nq(); ++q) {
      const double s = ctx.weight(q);
      const Vec2 uq = ctx.value2(*u, q);
      const double phiq = ctx.value(*phi, q);
      const Vec2 gphi = ctx.grad(*phi, q);
      const double* v = ctx.basis_values(block, q);
      const Vec2* g = ctx.basis_grads(block, q);
      const double src = phiq / dt - 0.5 * uq.dot(gphi);
      for (int i = 0; i < np; ++i) buf[i] += s * (v[i] + tau * uq.dot(g[i])) * src;
    }
  });
}

void SystemAssembler::add_load(int row, ScalarCoeff f) {
  if (impl_->block(row).components() != 1) throw ValidationError("add_load: scalar block required");
  const int np = impl_->block(row).nodes_per_elem();
  impl_->add_rhs_kernel(row, [=, f = std::move(f)](const ElemContext& ctx, double* buf) {
    for (int q = 0; q < ctx.nq(); ++q) {
      const double s = ctx.weight(q) * f(ctx, q);
      const double* v = ctx.basis_values(row, q);
      for (int i = 0; i < np; ++i) buf[i] += s * v[i];
    }
  });
}

void SystemAssembler::add_vector_load(int row, VectorCoeff f) {
  if (impl_->block(row).components() != 2)
    throw ValidationError("add_vector_load: vector block required");
  const int np = impl_->block(row).nodes_per_elem();
  impl_->add_rhs_kernel(row, [=, f = std::move(f)](const ElemContext& ctx, double* buf) {
    for (int q = 0; q < ctx.nq(); ++q) {
      const Vec2 fv = f(ctx, q);
      const double s = ctx.weight(q);
      const double* v = ctx.basis_values(row, q);
      for (int i = 0; i < np; ++i) {
        buf[i * 2] += s * v[i] * fv.x;
        buf[i * 2 + 1] += s * v[i] * fv.y;
      }
    }
  });
}

void SystemAssembler::add_grad_load(int row, VectorCoeff f) {
  if (impl_->block(row).components() != 1)
    throw ValidationError("add_grad_load: scalar block required");
  const int np = impl_->block(row).nodes_per_elem();
  impl_->add_rhs_kernel(row, [=, f = std::move(f)](const ElemContext& ctx, double* buf) {
    for (int q = 0; q < ctx.nq(); ++q) {
      const Vec2 fv = f(ctx, q);
      const double s = ctx.weight(q);
      const Vec2* g = ctx.basis_grads(row, q);
      for (int i = 0; i < np; ++i) buf[i] += s * (g[i].x * fv.x + g[i].y * fv.y);
    }
  });
}

SparseSystem SystemAssembler::assemble() {
  Impl& im = *impl_;
  const Mesh& mesh = im.blocks[0]->mesh();
  const int nt = mesh.n_triangles();
  const int n = im.offsets.back();
  const int per_elem = im.pair_buf_size + im.rhs_buf_size;

  std::vector<double> buffer(static_cast<std::size_t>(nt) * per_elem, 0.0);

  // Phase 1: per-element local blocks, independent across elements.
  const int n_chunks = (nt + detail::kChunk - 1) / detail::kChunk;
  const bool parallel = im.policy == ExecPolicy::OpenMP;
#pragma omp parallel for schedule(static) if (parallel)
  for (int chunk = 0; chunk < n_chunks; ++chunk) {
    ElemScratch scratch;
    ElemContext ctx;
    ctx.tables_ = &im.tables;
    ctx.scratch_ = &scratch;
    ctx.mesh_ = &mesh;
    ctx.blocks_ = &im.blocks;
    ctx.nq_ = im.rule->size();
    const int begin = chunk * detail::kChunk;
    const int end = std::min(nt, begin + detail::kChunk);
    for (int e = begin; e < end; ++e) {
      prepare_scratch(mesh, e, *im.rule, scratch);
      ctx.elem_ = e;
      double* base = buffer.data() + static_cast<std::size_t>(e) * per_elem;
      for (const auto& p : im.pairs)
        if (p.kernel) p.kernel(ctx, base + p.buf_offset);
      for (const auto& r : im.rhss)
        if (r.kernel) r.kernel(ctx, base + im.pair_buf_size + r.buf_offset);
    }
  }

  // Phase 2: reduce in element order (deterministic for any thread count).
  SparseSystem sys;
  sys.block_offsets = im.offsets;
  sys.rhs = Eigen::VectorXd::Zero(n);

  auto global_row = [&](const Impl::PairItem& p, int e, int local) {
    const FunctionSpace& s = im.block(p.row);
    const int comps = s.components();
    const auto nodes = s.element_nodes(e);
    return im.offsets[p.row] + s.dof(nodes[local / comps], local % comps);
  };
  auto global_col = [&](const Impl::PairItem& p, int e, int local) {
    const FunctionSpace& s = im.block(p.col);
    const int comps = s.components();
    const auto nodes = s.element_nodes(e);
    return im.offsets[p.col] + s.dof(nodes[local / comps], local % comps);
  };

  const auto sig = im.signature();
  if (!im.pairs.empty()) {
    if (plan_ && plan_->signature == sig) {
      sys.matrix = plan_->skeleton;
      double* vals = sys.matrix.valuePtr();
      const int* scatter = plan_->scatter.data();
      std::size_t k = 0;
      for (int e = 0; e < nt; ++e) {
        const double* base = buffer.data() + static_cast<std::size_t>(e) * per_elem;
        for (const auto& p : im.pairs) {
          const double* local = base + p.buf_offset;
          const int count = p.nr * p.nc;
          for (int t = 0; t < count; ++t) vals[scatter[k++]] += local[t];
        }
      }
    } else {
      std::vector<Eigen::Triplet<double>> triplets;
      triplets.reserve(static_cast<std::size_t>(nt) * im.pair_buf_size + n);
      for (int d = 0; d < n; ++d) triplets.emplace_back(d, d, 0.0);  // keep diagonal in pattern
      for (int e = 0; e < nt; ++e) {
        const double* base = buffer.data() + static_cast<std::size_t>(e) * per_elem;
        for (const auto& p : im.pairs) {
          const double* local = base + p.buf_offset;
          for (int i = 0; i < p.nr; ++i) {
            const int gr = global_row(p, e, i);
            for (int j = 0; j < p.nc; ++j)
              triplets.emplace_back(gr, global_col(p, e, j), local[i * p.nc + j]);
          }
        }
      }
      sys.matrix.resize(n, n);
      sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
      sys.matrix.makeCompressed();

      // Record the scatter map so later assemblies skip the symbolic phase.
      auto new_plan = std::make_shared<AssemblyPlan>();
      new_plan->signature = sig;
      new_plan->offsets = im.offsets;
      new_plan->scatter.reserve(static_cast<std::size_t>(nt) * im.pair_buf_size);
      const int* outer = sys.matrix.outerIndexPtr();
      const int* inner = sys.matrix.innerIndexPtr();
      for (int e = 0; e < nt; ++e) {
        for (const auto& p : im.pairs) {
          for (int i = 0; i < p.nr; ++i) {
            const int gr = global_row(p, e, i);
            for (int j = 0; j < p.nc; ++j) {
              const int gc = global_col(p, e, j);
              const int* lo = inner + outer[gc];
              const int* hi = inner + outer[gc + 1];
              const int* pos = std::lower_bound(lo, hi, gr);
              new_plan->scatter.push_back(static_cast<int>(outer[gc] + (pos - lo)));
            }
          }
        }
      }
      new_plan->skeleton = sys.matrix;
      std::fill(new_plan->skeleton.valuePtr(), new_plan->skeleton.valuePtr() + new_plan->skeleton.nonZeros(),
                0.0);
      plan_ = std::move(new_plan);
    }
  }

  for (int e = 0; e < nt; ++e) {
    const double* base = buffer.data() + static_cast<std::size_t>(e) * per_elem + im.pair_buf_size;
    for (const auto& r : im.rhss) {
      const FunctionSpace& s = im.block(r.row);
      const int comps = s.components();
      const auto nodes = s.element_nodes(e);
      const double* local = base + r.buf_offset;
      for (int i = 0; i < r.n; ++i)
        sys.rhs[im.offsets[r.row] + s.dof(nodes[i / comps], i % comps)] += local[i];
    }
  }
  return sys;
}

void apply_essential_bc(SparseSystem& system, const std::vector<int>& dofs,
                        const std::vector<double>& values) {
  if (dofs.size() != values.size())
    throw ValidationError("apply_essential_bc: dofs/values size mismatch");
  const int n = system.n_dofs();
  std::vector<char> constrained(n, 0);
  std::vector<double> g(n, 0.0);
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    const int d = dofs[k];
    if (d < 0 || d >= n) throw ValidationError("apply_essential_bc: dof out of range");
    constrained[d] = 1;
    g[d] = values[k];
  }

  Eigen::SparseMatrix<double>& A = system.matrix;
  for (int j = 0; j < A.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (constrained[j]) {
        if (i == j) {
          it.valueRef() = 1.0;
        } else {
          if (!constrained[i]) system.rhs[i] -= it.value() * g[j];
          it.valueRef() = 0.0;
        }
      } else if (constrained[i]) {
        it.valueRef() = 0.0;
      }
    }
  }
  for (int d = 0; d < n; ++d)
    if (constrained[d]) system.rhs[d] = g[d];
}

// ---------------------------------------------------------------------------

struct Integrator::Impl {
  const Mesh* mesh;
  const TriangleQuadrature* rule;
  BasisTables tables;
  ExecPolicy policy;
  std::vector<const FunctionSpace*> no_blocks;
};

Integrator::Integrator(const Mesh& mesh, int quadrature_degree, ExecPolicy policy)
    : impl_(new Impl) {
  impl_->mesh = &mesh;
  impl_->rule = &triangle_quadrature(quadrature_degree);
  impl_->tables.build(*impl_->rule);
  impl_->policy = policy;
}

Integrator::~Integrator() = default;

Vec2 Integrator::integrate2(const VectorCoeff& f) const {
  const Mesh& mesh = *impl_->mesh;
  const int nt = mesh.n_triangles();
  const int n_chunks = (nt + detail::kChunk - 1) / detail::kChunk;
  std::vector<Vec2> partial(n_chunks, Vec2{0.0, 0.0});
  const bool parallel = impl_->policy == ExecPolicy::OpenMP;
#pragma omp parallel for schedule(static) if (parallel)
  for (int chunk = 0; chunk < n_chunks; ++chunk) {
    ElemScratch scratch;
    ElemContext ctx;
    ctx.tables_ = &impl_->tables;
    ctx.scratch_ = &scratch;
    ctx.mesh_ = &mesh;
    ctx.blocks_ = &impl_->no_blocks;
    ctx.nq_ = impl_->rule->size();
    Vec2 acc{0.0, 0.0};
    const int begin = chunk * detail::kChunk;
    const int end = std::min(nt, begin + detail::kChunk);
    for (int e = begin; e < end; ++e) {
      prepare_scratch(mesh, e, *impl_->rule, scratch);
      ctx.elem_ = e;
      for (int q = 0; q < ctx.nq(); ++q) acc += f(ctx, q) * ctx.weight(q);
    }
    partial[chunk] = acc;
  }
  Vec2 total{0.0, 0.0};
  for (const auto& p : partial) total += p;
  return total;
}

double Integrator::integrate(const ScalarCoeff& f) const {
  return integrate2([&f](const ElemContext& ctx, int q) { return Vec2{f(ctx, q), 0.0}; }).x;
}

// ---------------------------------------------------------------------------

struct L2Projector::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> mass;
};

L2Projector::L2Projector(const FunctionSpace& space, int quadrature_degree, ExecPolicy policy)
    : space_(space), quad_degree_(quadrature_degree), policy_(policy), impl_(new Impl) {
  SystemAssembler asmb({&space}, quadrature_degree, policy);
  asmb.add_mass(0, 0);
  SparseSystem sys = asmb.assemble();
  impl_->mass.compute(sys.matrix);
  if (impl_->mass.info() != Eigen::Success)
    throw NumericError("L2Projector: mass matrix factorization failed");
}

L2Projector::~L2Projector() = default;

DiscreteField L2Projector::solve_against(const Eigen::VectorXd& load) const {
  DiscreteField out(space_);
  out.coeffs = impl_->mass.solve(load);
  if (impl_->mass.info() != Eigen::Success) throw NumericError("L2Projector: mass solve failed");
  return out;
}

DiscreteField L2Projector::project(const ScalarCoeff& f) const {
  SystemAssembler asmb({&space_}, quad_degree_, policy_);
  asmb.add_load(0, f);
  return solve_against(asmb.assemble().rhs);
}

DiscreteField L2Projector::project2(const VectorCoeff& f) const {
  SystemAssembler asmb({&space_}, quad_degree_, policy_);
  asmb.add_vector_load(0, f);
  return solve_against(asmb.assemble().rhs);
}

DiscreteField L2Projector::project_weak_divergence(const VectorCoeff& x) const {
  SystemAssembler asmb({&space_}, quad_degree_, policy_);
  asmb.add_grad_load(0, x);
  return solve_against(-asmb.assemble().rhs);
}

DiscreteField project_l2(const FunctionSpace& space, int quadrature_degree, const ScalarCoeff& f,
                         ExecPolicy policy) {
  return L2Projector(space, quadrature_degree, policy).project(f);
}

}  // namespace lsfem
