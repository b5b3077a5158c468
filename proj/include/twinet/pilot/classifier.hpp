#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "twinet/pilot/frames.hpp"

namespace twinet::pilot {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct NormStats {
    Vector mean;
    Vector std;
};

/// Features are rows of `x`; labels are jam classes.
struct Dataset {
    Matrix x;
    std::vector<int> y;

    std::size_t size() const noexcept { return y.size(); }
};

struct DatasetSplit {
    Dataset train;
    Dataset test;
    NormStats norm;
};

/// Raw log-power samples, class-balanced: sample i has class i mod (P+1).
Dataset generate_samples(const PilotConfig& pilots, std::size_t n, std::mt19937_64& rng, const FrameModel& model = {});

/// Column mean and population std; a zero std is replaced by 1.
NormStats fit_norm(const Matrix& x);
void normalize(Matrix& x, const NormStats& norm);

/// Train and test sets from one seeded stream, both z-scored with train statistics.
DatasetSplit make_dataset(const PilotConfig& pilots, std::size_t n_train, std::size_t n_test, std::uint64_t seed,
                          const FrameModel& model = {});

struct ClassifierModel {
    Matrix weights;  // (P+1) x K
    Vector bias;     // P+1
    PilotConfig pilot_config;
    NormStats norm;
    std::uint32_t version = 1;
    std::uint64_t seed = 0;

    /// Bitwise equality of every field.
    bool identical(const ClassifierModel& other) const;
};

struct Gradient {
    double loss = 0.0;
    Matrix d_weights;
    Vector d_bias;
};

/// Mean cross-entropy of softmax(W x + b) over the batch and its gradient.
/// Throws std::invalid_argument on empty/mismatched/non-finite input.
Gradient loss_and_gradient(const Matrix& weights, const Vector& bias, const Matrix& x, const std::vector<int>& y);

struct TrainHyper {
    double learning_rate = 0.01;
    std::size_t iterations = 300;
    double init_sigma = 0.01;
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t iteration, double loss);
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

struct TrainResult {
    ClassifierModel model;
    std::vector<double> loss_history;  // loss before each update, then the final loss
    double final_loss = 0.0;
    double train_accuracy = 0.0;
    bool loss_monotone = true;  // non-increasing at every step
};

/// Full-batch gradient descent from W ~ N(0, init_sigma), b = 0.
TrainResult train_model(const Dataset& train, const NormStats& norm, const PilotConfig& pilots,
                        const TrainHyper& hyper, std::uint64_t seed);

/// Class index with the highest score; ties go to the lowest index.
int argmax_lowest(const Vector& v);

/// Row-wise class predictions on already-normalized features.
std::vector<int> predict_normalized(const ClassifierModel& model, const Matrix& x);
double accuracy(const ClassifierModel& model, const Dataset& data);

struct Prediction {
    int jam_class = 0;
    Vector probabilities;
};

/// Throws std::invalid_argument if the frame length differs from K.
Prediction predict(const ClassifierModel& model, const SpectrumFrame& frame);

}  // namespace twinet::pilot
