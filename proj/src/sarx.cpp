#include "arxcv/sarx.hpp"
#include "arxcv/errors.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace arxcv {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

std::vector<Index> zero_based(const std::vector<int>& idx, Index T) {
    std::vector<Index> out;
    out.reserve(idx.size());
    for (int t : idx) {
        if (t < 1 || t > T) throw std::invalid_argument("index out of range");
        out.push_back(t - 1);
    }
    return out;
}

MatrixXd spd_inverse(const MatrixXd& M, const char* what) {
    Eigen::LLT<MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw NumericalFailure(std::string("Cholesky failed: ") + what);
    return llt.solve(MatrixXd::Identity(M.rows(), M.cols()));
}

MatrixXd gather(const MatrixXd& M, const std::vector<Index>& rows, const std::vector<Index>& cols) {
    MatrixXd out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = M(rows[i], cols[j]);
    return out;
}

MatrixXd gather_rows(const MatrixXd& M, const std::vector<Index>& rows) {
    MatrixXd out(rows.size(), M.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = M.row(rows[i]);
    return out;
}

struct Scored {
    MatrixXd M;      // inverse of the (possibly diagonalised) test covariance
    double logdet;
};

Scored score_cov(const MatrixXd& V, Mode mode) {
    Scored s;
    if (mode == Mode::Pointwise) {
        const VectorXd d = V.diagonal();
        if ((d.array() <= 0.0).any()) throw NumericalFailure("non-positive predictive variance");
        s.M = d.cwiseInverse().asDiagonal();
        s.logdet = d.array().log().sum();
    } else {
        Eigen::LLT<MatrixXd> llt(V);
        if (llt.info() != Eigen::Success) throw NumericalFailure("Cholesky of test-block predictive covariance failed");
        s.M = llt.solve(MatrixXd::Identity(V.rows(), V.cols()));
        s.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    }
    return s;
}

QuadForm block_elpd(const SarxModel& model, const ArxSpec& dgp, const std::vector<int>& test,
                    const std::vector<int>& train, Mode mode) {
    model.validate();
    if (test.empty()) throw std::invalid_argument("test set is empty");
    const Index T = model.T();
    if (dgp.T() != T) throw std::invalid_argument("model and DGP lengths differ");
    const auto te = zero_based(test, T);
    const FoldPredictive fp = fold_predictive(model, train);
    const double s2 = model.arx.sigma2;

    const MatrixXd Wl = ar_covariance(model.arx.phi, T);
    const MatrixXd Ws = ar_covariance(dgp.phi, T);
    const VectorXd mstar = ar_solve(dgp.phi, VectorXd(dgp.Z * dgp.beta));

    const MatrixXd Xte = gather_rows(fp.X, te);
    const MatrixXd Vte = gather(Wl, te, te) + Xte * fp.Sigma_beta * Xte.transpose();
    const MatrixXd Vs = gather(Ws, te, te);
    const Scored sc = score_cov(Vte, mode);
    VectorXd delta(te.size());
    for (std::size_t i = 0; i < te.size(); ++i) delta(i) = fp.e(te[i]) - mstar(te[i]);

    const MatrixXd SX = fp.Sigma_beta * Xte.transpose();     // q x v
    const MatrixXd K = SX * sc.M * SX.transpose();            // q x q
    MatrixXd A = -(0.5 / s2) * (fp.B * K * fp.B.transpose());
    VectorXd b = -(1.0 / s2) * (fp.B * (SX * (sc.M * delta)));
    const double v = static_cast<double>(te.size());
    const double c = -0.5 * (v * (kLog2Pi + std::log(s2)) + sc.logdet)
                     - dgp.sigma2 / (2.0 * s2) * (sc.M.cwiseProduct(Vs)).sum()
                     - delta.dot(sc.M * delta) / (2.0 * s2);
    return QuadForm(std::move(A), std::move(b), c);
}

} // namespace

std::vector<int> all_indices(int T) {
    std::vector<int> out(T);
    for (int t = 0; t < T; ++t) out[t] = t + 1;
    return out;
}

void SarxModel::validate() const {
    if (!(arx.sigma2 > 0.0)) throw std::invalid_argument("model sigma2 must be positive");
    if (arx.Z.rows() < 1 || arx.Z.cols() < 1) throw std::invalid_argument("model Z is empty");
    for (Index t = 0; t < arx.Z.rows(); ++t)
        if (arx.Z(t, 0) != 1.0) throw std::invalid_argument("first column of Z must be ones");
    if (prior_mean.size() != arx.Z.cols() || prior_cov.rows() != arx.Z.cols() || prior_cov.cols() != arx.Z.cols())
        throw std::invalid_argument("prior dimensions must match the columns of Z");
    if (arx.stationary && !is_stationary(arx.phi)) throw std::invalid_argument("model phi is not stationary");
}

QuadForm::QuadForm(MatrixXd A_, VectorXd b_, double c_) : A(std::move(A_)), b(std::move(b_)), c(c_) {
    if (A.rows() != A.cols() || A.rows() != b.size()) throw std::invalid_argument("QuadForm dimensions disagree");
    MatrixXd S = 0.5 * (A + A.transpose());
    A = std::move(S);
}

double QuadForm::eval(const VectorXd& y) const {
    if (y.size() != b.size()) throw std::invalid_argument("QuadForm::eval length mismatch");
    return y.dot(A * y) + y.dot(b) + c;
}

double eval(const QuadForm& q, const VectorXd& y) { return q.eval(y); }

QuadForm diff(const QuadForm& a, const QuadForm& b) {
    if (a.T() != b.T()) throw std::invalid_argument("diff of QuadForms with different T");
    return QuadForm(a.A - b.A, a.b - b.b, a.c - b.c);
}

FoldPredictive fold_predictive(const SarxModel& model, const std::vector<int>& train) {
    if (train.empty()) throw std::invalid_argument("train set is empty");
    const Index T = model.T();
    const auto tr = zero_based(train, T);
    const SubsetPrecision P(model.arx.phi, T, tr);
    FoldPredictive fp;
    fp.X = ar_solve(model.arx.phi, model.arx.Z);
    fp.B = P.apply(fp.X);
    const MatrixXd S0inv = spd_inverse(model.prior_cov, "prior covariance");
    MatrixXd H = fp.X.transpose() * fp.B + S0inv;
    H = 0.5 * (H + H.transpose()).eval();
    fp.Sigma_beta = spd_inverse(H, "posterior precision");
    fp.e = fp.X * (fp.Sigma_beta * (S0inv * model.prior_mean));
    return fp;
}

Posterior posterior_params(const SarxModel& model, const std::vector<int>& train) {
    model.validate();
    const FoldPredictive fp = fold_predictive(model, train);
    const MatrixXd S0inv = spd_inverse(model.prior_cov, "prior covariance");
    Posterior post;
    post.Sigma_beta = fp.Sigma_beta;
    post.gain = fp.Sigma_beta * fp.B.transpose();
    post.offset = fp.Sigma_beta * (S0inv * model.prior_mean);
    return post;
}

PredictiveParams predictive_params(const SarxModel& model, const std::vector<int>& train) {
    model.validate();
    const FoldPredictive fp = fold_predictive(model, train);
    PredictiveParams pp;
    pp.D = fp.X * fp.Sigma_beta * fp.B.transpose();
    pp.e = fp.e;
    pp.V = ar_covariance(model.arx.phi, model.T()) + fp.X * fp.Sigma_beta * fp.X.transpose();
    pp.V = 0.5 * (pp.V + pp.V.transpose()).eval();
    pp.sigma2 = model.arx.sigma2;
    return pp;
}

QuadForm eljpd_quadform(const SarxModel& model, const ArxSpec& dgp, const std::vector<int>& test,
                        const std::vector<int>& train) {
    return block_elpd(model, dgp, test, train, Mode::Joint);
}

QuadForm elppd_quadform(const SarxModel& model, const ArxSpec& dgp, const std::vector<int>& test,
                        const std::vector<int>& train) {
    return block_elpd(model, dgp, test, train, Mode::Pointwise);
}

QuadForm elpd_quadform(const SarxModel& model, const ArxSpec& dgp, Mode mode) {
    const auto all = all_indices(static_cast<int>(model.T()));
    return block_elpd(model, dgp, all, all, mode);
}

QuadForm cv_quadform(const SarxModel& model, const FoldPlan& plan) {
    model.validate();
    const Index T = model.T();
    if (plan.T != T) throw std::invalid_argument("plan length differs from model length");
    const auto bad = validate_plan(plan);
    if (!bad.empty()) throw InfeasibleScheme("invalid plan: " + bad.front(), 0);

    const double s2 = model.arx.sigma2;
    const double K = static_cast<double>(plan.folds.size());
    const MatrixXd Wl = ar_covariance(model.arx.phi, T);

    Index rows = 0;
    for (const Fold& f : plan.folds) rows += static_cast<Index>(f.test.size());
    MatrixXd F(rows, T);
    VectorXd b = VectorXd::Zero(T);
    double c = 0.0;

    Index off = 0;
    for (const Fold& f : plan.folds) {
        const auto te = zero_based(f.test, T);
        const Index v = static_cast<Index>(te.size());
        const FoldPredictive fp = fold_predictive(model, f.train);
        const MatrixXd Xte = gather_rows(fp.X, te);
        const MatrixXd U = Xte * fp.Sigma_beta;                  // v x q
        MatrixXd V = gather(Wl, te, te) + U * Xte.transpose();
        const double w = T / (K * v);
        const double scale = std::sqrt(w / (2.0 * s2));

        // G = S_test (I - D) = E_test - U B'
        MatrixXd G = -U * fp.B.transpose();
        for (Index i = 0; i < v; ++i) G(i, te[i]) += 1.0;
        VectorXd et(v);
        for (Index i = 0; i < v; ++i) et(i) = fp.e(te[i]);

        double logdet;
        if (plan.mode == Mode::Pointwise) {
            const VectorXd sd = V.diagonal().cwiseSqrt();
            if (!(sd.array() > 0.0).all()) throw NumericalFailure("non-positive predictive variance");
            G = sd.cwiseInverse().asDiagonal() * G;
            et = et.cwiseQuotient(sd);
            logdet = 2.0 * sd.array().log().sum();
        } else {
            Eigen::LLT<MatrixXd> llt(V);
            if (llt.info() != Eigen::Success)
                throw NumericalFailure("Cholesky of fold predictive covariance failed");
            llt.matrixL().solveInPlace(G);
            llt.matrixL().solveInPlace(et);
            logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        }
        G *= scale;
        et *= scale;
        F.middleRows(off, v) = G;
        b.noalias() += 2.0 * (G.transpose() * et);
        c += w * (-0.5 * v * (kLog2Pi + std::log(s2)) - 0.5 * logdet) - et.squaredNorm();
        off += v;
    }
    MatrixXd A = MatrixXd::Zero(T, T);
    A.selfadjointView<Eigen::Lower>().rankUpdate(F.transpose(), -1.0);
    A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
    return QuadForm(std::move(A), std::move(b), c);
}

void write_quadform_csv(std::ostream& os, const QuadForm& q) {
    os << "term,i,j,value\n";
    for (Index i = 0; i < q.A.rows(); ++i)
        for (Index j = 0; j < q.A.cols(); ++j)
            os << "A," << (i + 1) << ',' << (j + 1) << ',' << format_double(q.A(i, j)) << '\n';
    for (Index i = 0; i < q.b.size(); ++i) os << "b," << (i + 1) << ",," << format_double(q.b(i)) << '\n';
    os << "c,,," << format_double(q.c) << '\n';
}

} // namespace arxcv
