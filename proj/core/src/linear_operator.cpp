#include "tristab/linear_operator.hpp"

#include <stdexcept>
#include <variant>

#include "json_text.hpp"

namespace tristab::triple {

namespace {

struct ConjugationForm {
  ComplexMatrix u;
  ComplexMatrix u_adjoint;
};
struct CommutatorForm {
  ComplexMatrix a;
};
struct ScaledForm {
  Complex c;
  LinearOperator inner;
};
struct SumForm {
  std::vector<LinearOperator> terms;
};
struct ComposeForm {
  LinearOperator outer;
  LinearOperator inner;
};
struct TabulatedForm {
  ComplexMatrix coeffs;
};

}  // namespace

struct LinearOperator::Node {
  std::size_t dim;
  std::variant<ConjugationForm, CommutatorForm, ScaledForm, SumForm, ComposeForm, TabulatedForm>
      form;
};

LinearOperator LinearOperator::conjugation(ComplexMatrix u) {
  const std::size_t n = u.dim();
  ComplexMatrix u_adj = linalg::adjoint(u);
  const double defect =
      linalg::norm(linalg::subtract(linalg::matmul(u_adj, u), ComplexMatrix::identity(n)));
  if (!(defect <= kStructureTolerance)) {
    throw std::invalid_argument("conjugation: u is not unitary (||u*u - I|| = " +
                                detail::format_double(defect) + ")");
  }
  return LinearOperator(std::make_shared<const Node>(
      Node{n, ConjugationForm{std::move(u), std::move(u_adj)}}));
}

LinearOperator LinearOperator::commutator(ComplexMatrix a) {
  const double defect = linalg::norm(linalg::add(linalg::adjoint(a), a));
  if (!(defect <= kStructureTolerance)) {
    throw std::invalid_argument("commutator: a is not skew-adjoint (||a* + a|| = " +
                                detail::format_double(defect) + ")");
  }
  const std::size_t n = a.dim();
  return LinearOperator(std::make_shared<const Node>(Node{n, CommutatorForm{std::move(a)}}));
}

LinearOperator LinearOperator::scaled(Complex c, LinearOperator inner) {
  const std::size_t n = inner.dim();
  return LinearOperator(std::make_shared<const Node>(Node{n, ScaledForm{c, std::move(inner)}}));
}

LinearOperator LinearOperator::sum(std::size_t dim, std::vector<LinearOperator> terms) {
  for (const auto& t : terms)
    if (t.dim() != dim) throw linalg::DimensionMismatch("LinearOperator::sum", dim, t.dim());
  return LinearOperator(std::make_shared<const Node>(Node{dim, SumForm{std::move(terms)}}));
}

LinearOperator LinearOperator::compose(LinearOperator outer, LinearOperator inner) {
  if (outer.dim() != inner.dim())
    throw linalg::DimensionMismatch("LinearOperator::compose", outer.dim(), inner.dim());
  const std::size_t n = outer.dim();
  return LinearOperator(
      std::make_shared<const Node>(Node{n, ComposeForm{std::move(outer), std::move(inner)}}));
}

LinearOperator LinearOperator::tabulated(std::size_t dim, ComplexMatrix coeffs) {
  if (coeffs.dim() != dim * dim)
    throw linalg::DimensionMismatch("LinearOperator::tabulated", dim * dim, coeffs.dim());
  return LinearOperator(std::make_shared<const Node>(Node{dim, TabulatedForm{std::move(coeffs)}}));
}

LinearOperator LinearOperator::identity(std::size_t dim) {
  return tabulated(dim, ComplexMatrix::identity(dim * dim));
}

LinearOperator LinearOperator::zero(std::size_t dim) {
  return tabulated(dim, ComplexMatrix::zero(dim * dim));
}

std::size_t LinearOperator::dim() const noexcept { return node_->dim; }

LinearOperator::Form LinearOperator::form() const noexcept {
  return static_cast<Form>(node_->form.index());
}

ComplexMatrix LinearOperator::apply(const ComplexMatrix& x) const {
  if (x.dim() != dim()) throw linalg::DimensionMismatch("LinearOperator::apply", dim(), x.dim());
  return std::visit(
      [&](const auto& f) -> ComplexMatrix {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConjugationForm>) {
          return linalg::matmul(linalg::matmul(f.u, x), f.u_adjoint);
        } else if constexpr (std::is_same_v<T, CommutatorForm>) {
          return linalg::subtract(linalg::matmul(f.a, x), linalg::matmul(x, f.a));
        } else if constexpr (std::is_same_v<T, ScaledForm>) {
          return linalg::scalar_mul(f.c, f.inner.apply(x));
        } else if constexpr (std::is_same_v<T, SumForm>) {
          ComplexMatrix acc(x.dim());
          for (const auto& t : f.terms) acc += t.apply(x);
          return acc;
        } else if constexpr (std::is_same_v<T, ComposeForm>) {
          return f.outer.apply(f.inner.apply(x));
        } else {
          const std::vector<Complex> in = linalg::vec(x);
          const std::size_t m = in.size();
          std::vector<Complex> out(m);
          for (std::size_t i = 0; i < m; ++i) {
            Complex acc{};
            for (std::size_t j = 0; j < m; ++j) acc += f.coeffs(i, j) * in[j];
            out[i] = acc;
          }
          return linalg::unvec(x.dim(), out);
        }
      },
      node_->form);
}

LinearOperator LinearOperator::lower() const {
  if (form() == Form::kTabulated) return *this;
  const std::size_t n = dim();
  ComplexMatrix coeffs(n * n);
  for (std::size_t k = 0; k < n * n; ++k) {
    // column-stacked basis: k = col * n + row
    const ComplexMatrix image = apply(ComplexMatrix::unit(n, k % n, k / n));
    const std::vector<Complex> column = linalg::vec(image);
    for (std::size_t i = 0; i < n * n; ++i) coeffs(i, k) = column[i];
  }
  return tabulated(n, std::move(coeffs));
}

ComplexMatrix LinearOperator::coefficients() const {
  if (const auto* t = std::get_if<TabulatedForm>(&node_->form)) return t->coeffs;
  return lower().coefficients();
}

const ComplexMatrix& LinearOperator::matrix() const {
  if (const auto* f = std::get_if<ConjugationForm>(&node_->form)) return f->u;
  if (const auto* f = std::get_if<CommutatorForm>(&node_->form)) return f->a;
  if (const auto* f = std::get_if<TabulatedForm>(&node_->form)) return f->coeffs;
  throw std::logic_error("LinearOperator::matrix: form has no defining matrix");
}

Complex LinearOperator::scale() const {
  if (const auto* f = std::get_if<ScaledForm>(&node_->form)) return f->c;
  throw std::logic_error("LinearOperator::scale: not a scaled operator");
}

const LinearOperator& LinearOperator::inner() const {
  if (const auto* f = std::get_if<ScaledForm>(&node_->form)) return f->inner;
  if (const auto* f = std::get_if<ComposeForm>(&node_->form)) return f->inner;
  throw std::logic_error("LinearOperator::inner: not a scaled or composed operator");
}

const LinearOperator& LinearOperator::outer() const {
  if (const auto* f = std::get_if<ComposeForm>(&node_->form)) return f->outer;
  throw std::logic_error("LinearOperator::outer: not a composed operator");
}

const std::vector<LinearOperator>& LinearOperator::terms() const {
  if (const auto* f = std::get_if<SumForm>(&node_->form)) return f->terms;
  throw std::logic_error("LinearOperator::terms: not a sum");
}

namespace {

nlohmann::json to_json_value(const LinearOperator& op) {
  nlohmann::json j;
  j["dim"] = op.dim();
  j["form"] = std::string(to_string(op.form()));
  switch (op.form()) {
    case LinearOperator::Form::kConjugation:
      j["u"] = detail::matrix_to_json(op.matrix());
      break;
    case LinearOperator::Form::kCommutator:
      j["a"] = detail::matrix_to_json(op.matrix());
      break;
    case LinearOperator::Form::kScaled:
      j["c"] = {op.scale().real(), op.scale().imag()};
      j["inner"] = to_json_value(op.inner());
      break;
    case LinearOperator::Form::kSum: {
      auto terms = nlohmann::json::array();
      for (const auto& t : op.terms()) terms.push_back(to_json_value(t));
      j["terms"] = std::move(terms);
      break;
    }
    case LinearOperator::Form::kCompose:
      j["outer"] = to_json_value(op.outer());
      j["inner"] = to_json_value(op.inner());
      break;
    case LinearOperator::Form::kTabulated:
      j["coeffs"] = detail::matrix_to_json(op.matrix());
      break;
  }
  return j;
}

LinearOperator from_json_value(const nlohmann::json& j) {
  const auto dim = j.at("dim").get<std::size_t>();
  const auto form = j.at("form").get<std::string>();
  if (form == "conjugation") return LinearOperator::conjugation(detail::matrix_from_json(dim, j.at("u")));
  if (form == "commutator") return LinearOperator::commutator(detail::matrix_from_json(dim, j.at("a")));
  if (form == "scaled") {
    return LinearOperator::scaled(detail::complex_from_json(j.at("c")), from_json_value(j.at("inner")));
  }
  if (form == "sum") {
    std::vector<LinearOperator> terms;
    for (const auto& t : j.at("terms")) terms.push_back(from_json_value(t));
    return LinearOperator::sum(dim, std::move(terms));
  }
  if (form == "compose") {
    return LinearOperator::compose(from_json_value(j.at("outer")), from_json_value(j.at("inner")));
  }
  if (form == "tabulated") {
    return LinearOperator::tabulated(dim, detail::matrix_from_json(dim * dim, j.at("coeffs")));
  }
  throw std::invalid_argument("LinearOperator JSON: unknown form \"" + form + "\"");
}

}  // namespace

std::string LinearOperator::to_json() const { return detail::render_json(to_json_value(*this)); }

LinearOperator LinearOperator::from_json(std::string_view text) {
  try {
    return from_json_value(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("LinearOperator JSON: ") + e.what());
  }
}

std::string_view to_string(LinearOperator::Form form) noexcept {
  switch (form) {
    case LinearOperator::Form::kConjugation: return "conjugation";
    case LinearOperator::Form::kCommutator: return "commutator";
    case LinearOperator::Form::kScaled: return "scaled";
    case LinearOperator::Form::kSum: return "sum";
    case LinearOperator::Form::kCompose: return "compose";
    case LinearOperator::Form::kTabulated: return "tabulated";
  }
  return "unknown";
}

double max_coefficient_diff(const LinearOperator& a, const LinearOperator& b) {
  return linalg::max_abs_diff(a.coefficients(), b.coefficients());
}

}  // namespace tristab::triple
