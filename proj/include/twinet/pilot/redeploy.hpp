#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "twinet/link/endpoint.hpp"
#include "twinet/pilot/classifier.hpp"

namespace twinet::pilot {

/// P distinct sorted indices drawn uniformly from subcarriers outside the
/// current pilot set. Throws std::invalid_argument if `jammed_index` is not a
/// current pilot or fewer than P subcarriers are free.
PilotConfig select_new_pilots(const PilotConfig& current, std::size_t jammed_index, std::uint64_t seed);

struct ModelRequest {
    std::size_t n_subcarriers = 0;
    std::vector<std::size_t> pilot_indices;
    std::string scenario_label;
    std::uint64_t seed = 0;

    PilotConfig pilots() const { return {n_subcarriers, pilot_indices, scenario_label}; }
};

std::vector<std::uint8_t> encode_model_request(const ModelRequest& r);
ModelRequest decode_model_request(std::span<const std::uint8_t> payload);

struct StageTimes {
    double data_collection_s = 0.0;
    double data_processing_s = 0.0;
    double model_creation_s = 0.0;
};

/// Twin-side status message sent after every request.
struct ModelReport {
    std::uint64_t request_seq = 0;
    std::optional<std::uint64_t> artifact_seq;  // absent on error
    std::string status;                         // "ok" or "error"
    std::string error;
    double request_transfer_s = 0.0;
    StageTimes stages;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

std::vector<std::uint8_t> encode_model_report(const ModelReport& r);
ModelReport decode_model_report(std::span<const std::uint8_t> payload);

struct FactoryOptions {
    std::size_t n_train = 5000;
    std::size_t n_test = 1000;
    TrainHyper hyper;
    FrameModel frames;
};

struct FactoryOutput {
    ClassifierModel model;
    StageTimes stages;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

/// Synthesizes data for the requested pilots and trains a model on it.
/// Single-threaded and deterministic apart from the stage timings.
class ModelFactory {
public:
    explicit ModelFactory(FactoryOptions options = {}) : options_(options) {}

    /// Throws TrainingDiverged or std::invalid_argument.
    FactoryOutput build(const ModelRequest& request) const;

    /// Answers ModelRequests until `stop` is set: artifact first, then the report.
    void serve(link::LinkEndpoint& endpoint, const std::atomic<bool>& stop) const;

    const FactoryOptions& options() const noexcept { return options_; }

private:
    FactoryOptions options_;
};

/// An immutable (model, pilots) pair. Pilots always equal the model's own
/// pilot config; the base station swaps whole deployments.
struct Deployment {
    ClassifierModel model;
    PilotConfig pilots;
    std::uint64_t generation = 0;
};

class BaseStation {
public:
    explicit BaseStation(ClassifierModel initial);

    std::shared_ptr<const Deployment> current() const;
    /// Replaces the deployment in one step; returns the new generation.
    std::uint64_t deploy(ClassifierModel model);

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const Deployment> current_;
};

struct RedeployTiming {
    double data_transfer_s = 0.0;
    double data_collection_s = 0.0;
    double data_processing_s = 0.0;
    double model_creation_s = 0.0;
    double total_deployment_s = 0.0;
};

struct RedeployOutcome {
    ClassifierModel model;
    RedeployTiming timing;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::uint64_t generation = 0;
};

class RedeployError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Subscribes the base-station endpoint to the artifact and report topics.
void prepare_base_station_link(link::LinkEndpoint& bs);

/// Requests a model for `pilots` from the twin and waits for it. The
/// returned timing's total covers request to decoded model. Throws
/// RedeployError on a twin-side error or timeout.
RedeployOutcome request_model(link::LinkEndpoint& bs_link, const PilotConfig& pilots, std::uint64_t seed,
                              std::chrono::milliseconds timeout = std::chrono::minutes{2});

/// request_model() followed by the swap; total includes the swap. On error
/// the current deployment stays in place.
RedeployOutcome run_redeploy_pipeline(BaseStation& bs, link::LinkEndpoint& bs_link, const PilotConfig& new_pilots,
                                      std::uint64_t seed, std::chrono::milliseconds timeout = std::chrono::minutes{2});

struct JamEvent {
    std::uint64_t frame_index = 0;
    std::size_t jam_class = 0;
    std::size_t subcarrier = 0;  // pilot index under the deployment that saw it
    std::uint64_t generation = 0;
};

/// Declares a jam once the same run of jammed predictions reaches `threshold`
/// consecutive frames; at most one event per run.
class JamDetector {
public:
    explicit JamDetector(std::size_t threshold = 3) : threshold_(threshold) {}

    /// True exactly on the frame that completes a qualifying run.
    bool observe(std::size_t predicted_class);
    void reset() noexcept { streak_ = 0; }

private:
    std::size_t threshold_;
    std::size_t streak_ = 0;
};

/// Base-station detection loop over a frame stream. Each frame is classified
/// with a single snapshot of the deployment, so the pilots used to interpret
/// a prediction always belong to the model that made it.
class DetectionLoop {
public:
    using Trigger = std::function<void(const JamEvent&, const Deployment&)>;

    DetectionLoop(BaseStation& bs, Trigger on_event = {}, std::size_t debounce = 3);

    std::optional<JamEvent> process(const SpectrumFrame& frame);

    std::uint64_t frames() const noexcept { return frames_; }
    std::uint64_t events() const noexcept { return events_; }

private:
    BaseStation& bs_;
    Trigger on_event_;
    JamDetector detector_;
    std::uint64_t last_generation_ = 0;
    std::uint64_t frames_ = 0;
    std::uint64_t events_ = 0;
};

/// Runs the loop over `frames` and returns the emitted events.
std::vector<JamEvent> detect_loop(BaseStation& bs, std::span<const SpectrumFrame> frames);

}  // namespace twinet::pilot
