#include "twinet/pilot/classifier.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstring>

namespace twinet::pilot {

namespace {

bool same(const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

/// Row-wise softmax of logits, in place.
void softmax_rows(Matrix& z) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        auto row = z.row(i);
        row.array() -= row.maxCoeff();
        row = row.array().exp().matrix();
        row /= row.sum();
    }
}

Matrix logits(const Matrix& weights, const Vector& bias, const Matrix& x) {
    Matrix z = x * weights.transpose();
    z.rowwise() += bias.transpose();
    return z;
}

}  // namespace

Dataset generate_samples(const PilotConfig& pilots, std::size_t n, std::mt19937_64& rng, const FrameModel& model) {
    pilots.validate();
    const auto k = static_cast<Eigen::Index>(pilots.n_subcarriers);
    Dataset d{Matrix(static_cast<Eigen::Index>(n), k), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const auto cls = i % pilots.classes();
        const auto frame = generate_frame(pilots, cls, rng, model);
        for (Eigen::Index j = 0; j < k; ++j) d.x(static_cast<Eigen::Index>(i), j) = std::log(frame.powers[j]);
        d.y[i] = static_cast<int>(cls);
    }
    return d;
}

NormStats fit_norm(const Matrix& x) {
    NormStats s;
    s.mean = x.colwise().mean().transpose();
    s.std = ((x.rowwise() - s.mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
    for (auto& v : s.std) {
        if (v == 0.0) v = 1.0;
    }
    return s;
}

void normalize(Matrix& x, const NormStats& norm) {
    x.rowwise() -= norm.mean.transpose();
    x.array().rowwise() /= norm.std.transpose().array();
}

DatasetSplit make_dataset(const PilotConfig& pilots, std::size_t n_train, std::size_t n_test, std::uint64_t seed,
                          const FrameModel& model) {
    if (n_train < pilots.classes() || n_test < pilots.classes()) {
        throw std::invalid_argument("dataset needs at least one sample per class");
    }
    std::mt19937_64 rng(seed);
    DatasetSplit s{generate_samples(pilots, n_train, rng, model), generate_samples(pilots, n_test, rng, model), {}};
    s.norm = fit_norm(s.train.x);
    normalize(s.train.x, s.norm);
    normalize(s.test.x, s.norm);
    return s;
}

bool ClassifierModel::identical(const ClassifierModel& other) const {
    return same(weights, other.weights) && same(bias, other.bias) && same(norm.mean, other.norm.mean) &&
           same(norm.std, other.norm.std) && pilot_config == other.pilot_config && version == other.version &&
           seed == other.seed;
}

Gradient loss_and_gradient(const Matrix& weights, const Vector& bias, const Matrix& x, const std::vector<int>& y) {
    const auto n = x.rows();
    const auto c = weights.rows();
    if (n == 0 || static_cast<std::size_t>(n) != y.size()) throw std::invalid_argument("batch is empty or mismatched");
    if (x.cols() != weights.cols() || bias.size() != c) throw std::invalid_argument("model and batch dims differ");
    if (!x.allFinite() || !weights.allFinite() || !bias.allFinite()) throw std::invalid_argument("non-finite input");

    Matrix p = logits(weights, bias, x);
    // log-sum-exp for the loss before normalizing in place
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int yi = y[static_cast<std::size_t>(i)];
        if (yi < 0 || yi >= c) throw std::invalid_argument(fmt::format("label {} out of range", yi));
        const double m = p.row(i).maxCoeff();
        const double lse = m + std::log((p.row(i).array() - m).exp().sum());
        loss += lse - p(i, yi);
    }
    softmax_rows(p);
    for (Eigen::Index i = 0; i < n; ++i) p(i, y[static_cast<std::size_t>(i)]) -= 1.0;

    const double inv_n = 1.0 / static_cast<double>(n);
    Gradient g;
    g.loss = loss * inv_n;
    g.d_weights = (p.transpose() * x) * inv_n;
    g.d_bias = p.colwise().sum().transpose() * inv_n;
    return g;
}

TrainingDiverged::TrainingDiverged(std::size_t iteration, double loss)
    : std::runtime_error(fmt::format("training diverged at iteration {} (loss {})", iteration, loss)),
      iteration_(iteration) {}

TrainResult train_model(const Dataset& train, const NormStats& norm, const PilotConfig& pilots,
                        const TrainHyper& hyper, std::uint64_t seed) {
    pilots.validate();
    const auto c = static_cast<Eigen::Index>(pilots.classes());
    const auto k = static_cast<Eigen::Index>(pilots.n_subcarriers);
    if (train.x.cols() != k) throw std::invalid_argument("feature count differs from K");

    TrainResult r;
    ClassifierModel& m = r.model;
    m.pilot_config = pilots;
    m.norm = norm;
    m.seed = seed;
    m.weights.resize(c, k);
    m.bias = Vector::Zero(c);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> init(0.0, hyper.init_sigma);
    for (Eigen::Index i = 0; i < c; ++i)
        for (Eigen::Index j = 0; j < k; ++j) m.weights(i, j) = init(rng);

    r.loss_history.reserve(hyper.iterations + 1);
    for (std::size_t it = 0; it <= hyper.iterations; ++it) {
        Gradient g = loss_and_gradient(m.weights, m.bias, train.x, train.y);
        if (!std::isfinite(g.loss)) throw TrainingDiverged(it, g.loss);
        if (!r.loss_history.empty() && g.loss > r.loss_history.back()) r.loss_monotone = false;
        r.loss_history.push_back(g.loss);
        if (it == hyper.iterations) break;
        m.weights -= hyper.learning_rate * g.d_weights;
        m.bias -= hyper.learning_rate * g.d_bias;
        if (!m.weights.allFinite() || !m.bias.allFinite()) throw TrainingDiverged(it + 1, g.loss);
    }
    r.final_loss = r.loss_history.back();
    r.train_accuracy = accuracy(m, train);
    return r;
}

int argmax_lowest(const Vector& v) {
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v(i) > v(best)) best = static_cast<int>(i);
    }
    return best;
}

std::vector<int> predict_normalized(const ClassifierModel& model, const Matrix& x) {
    Matrix z = logits(model.weights, model.bias, x);
    softmax_rows(z);
    std::vector<int> out(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax_lowest(z.row(i).transpose());
    return out;
}

double accuracy(const ClassifierModel& model, const Dataset& data) {
    if (data.size() == 0) return 0.0;
    const auto pred = predict_normalized(model, data.x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.y[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

Prediction predict(const ClassifierModel& model, const SpectrumFrame& frame) {
    const auto k = model.weights.cols();
    if (static_cast<Eigen::Index>(frame.powers.size()) != k) {
        throw std::invalid_argument(fmt::format("frame has {} subcarriers, model expects {}", frame.powers.size(), k));
    }
    Matrix x(1, k);
    for (Eigen::Index j = 0; j < k; ++j) x(0, j) = std::log(frame.powers[static_cast<std::size_t>(j)]);
    normalize(x, model.norm);
    Matrix p = logits(model.weights, model.bias, x);
    softmax_rows(p);
    Prediction out;
    out.probabilities = p.row(0).transpose();
    out.jam_class = argmax_lowest(out.probabilities);
    return out;
}

}  // namespace twinet::pilot
