#include "twinet/pilot/redeploy.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <random>

#include "twinet/link/clock.hpp"
#include "twinet/pilot/model_codec.hpp"

namespace twinet::pilot {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double us_to_s(std::int64_t us) { return static_cast<double>(us) / 1e6; }

std::vector<std::uint8_t> dump(const json& j) {
    const std::string s = j.dump();
    return {s.begin(), s.end()};
}

json parse(std::span<const std::uint8_t> payload, const char* what) {
    try {
        return json::parse(payload.begin(), payload.end());
    } catch (const json::exception& e) {
        throw link::EnvelopeError(fmt::format("bad {}: {}", what, e.what()));
    }
}

}  // namespace

PilotConfig select_new_pilots(const PilotConfig& current, std::size_t jammed_index, std::uint64_t seed) {
    current.validate();
    const auto& cur = current.pilot_indices;
    if (!std::binary_search(cur.begin(), cur.end(), jammed_index)) {
        throw std::invalid_argument(fmt::format("subcarrier {} is not a current pilot", jammed_index));
    }
    const std::size_t k = current.n_subcarriers;
    const std::size_t p = current.pilots();
    if (k - p < p) throw std::invalid_argument(fmt::format("only {} free subcarriers for {} pilots", k - p, p));

    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < k; ++i) {
        if (!std::binary_search(cur.begin(), cur.end(), i)) free.push_back(i);
    }
    // Partial Fisher-Yates: the first p entries are a uniform p-subset.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < p; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, free.size() - 1);
        std::swap(free[i], free[pick(rng)]);
    }
    PilotConfig next{k, {free.begin(), free.begin() + static_cast<std::ptrdiff_t>(p)}, current.label};
    std::sort(next.pilot_indices.begin(), next.pilot_indices.end());
    return next;
}

std::vector<std::uint8_t> encode_model_request(const ModelRequest& r) {
    json j;
    j["K"] = r.n_subcarriers;
    j["pilot_indices"] = r.pilot_indices;
    j["scenario_label"] = r.scenario_label;
    j["seed"] = r.seed;
    return dump(j);
}

ModelRequest decode_model_request(std::span<const std::uint8_t> payload) {
    const json j = parse(payload, "model request");
    try {
        return {j.at("K").get<std::size_t>(), j.at("pilot_indices").get<std::vector<std::size_t>>(),
                j.at("scenario_label").get<std::string>(), j.at("seed").get<std::uint64_t>()};
    } catch (const json::exception& e) {
        throw link::EnvelopeError(fmt::format("bad model request: {}", e.what()));
    }
}

std::vector<std::uint8_t> encode_model_report(const ModelReport& r) {
    json j;
    j["request_seq"] = r.request_seq;
    j["artifact_seq"] = r.artifact_seq ? json(*r.artifact_seq) : json(nullptr);
    j["status"] = r.status;
    j["error"] = r.error;
    j["request_transfer_s"] = r.request_transfer_s;
    j["data_collection_s"] = r.stages.data_collection_s;
    j["data_processing_s"] = r.stages.data_processing_s;
    j["model_creation_s"] = r.stages.model_creation_s;
    j["train_accuracy"] = r.train_accuracy;
    j["test_accuracy"] = r.test_accuracy;
    return dump(j);
}

ModelReport decode_model_report(std::span<const std::uint8_t> payload) {
    const json j = parse(payload, "model report");
    try {
        ModelReport r;
        r.request_seq = j.at("request_seq").get<std::uint64_t>();
        if (!j.at("artifact_seq").is_null()) r.artifact_seq = j.at("artifact_seq").get<std::uint64_t>();
        r.status = j.at("status").get<std::string>();
        r.error = j.at("error").get<std::string>();
        r.request_transfer_s = j.at("request_transfer_s").get<double>();
        r.stages = {j.at("data_collection_s").get<double>(), j.at("data_processing_s").get<double>(),
                    j.at("model_creation_s").get<double>()};
        r.train_accuracy = j.at("train_accuracy").get<double>();
        r.test_accuracy = j.at("test_accuracy").get<double>();
        return r;
    } catch (const json::exception& e) {
        throw link::EnvelopeError(fmt::format("bad model report: {}", e.what()));
    }
}

FactoryOutput ModelFactory::build(const ModelRequest& request) const {
    const PilotConfig pilots = request.pilots();
    pilots.validate();
    if (options_.n_train < pilots.classes() || options_.n_test < pilots.classes()) {
        throw std::invalid_argument("dataset needs at least one sample per class");
    }
    FactoryOutput out;

    auto t0 = Clock::now();
    std::mt19937_64 rng(request.seed);
    Dataset train = generate_samples(pilots, options_.n_train, rng, options_.frames);
    Dataset test = generate_samples(pilots, options_.n_test, rng, options_.frames);
    out.stages.data_collection_s = seconds_since(t0);

    t0 = Clock::now();
    const NormStats norm = fit_norm(train.x);
    normalize(train.x, norm);
    normalize(test.x, norm);
    out.stages.data_processing_s = seconds_since(t0);

    t0 = Clock::now();
    auto trained = train_model(train, norm, pilots, options_.hyper, request.seed);
    out.stages.model_creation_s = seconds_since(t0);

    out.train_accuracy = trained.train_accuracy;
    out.test_accuracy = accuracy(trained.model, test);
    out.model = std::move(trained.model);
    return out;
}

void ModelFactory::serve(link::LinkEndpoint& endpoint, const std::atomic<bool>& stop) const {
    endpoint.subscribe(std::string(link::topics::kModelRequest), mqtt::QoS::AtLeastOnce);
    while (!stop.load()) {
        auto msg = endpoint.poll(std::chrono::milliseconds{20});
        if (!msg || msg->envelope.topic != link::topics::kModelRequest) continue;

        ModelReport report;
        report.request_seq = msg->envelope.seq;
        report.request_transfer_s = us_to_s(msg->received_at_us - msg->envelope.sent_at);
        try {
            const auto out = build(decode_model_request(msg->envelope.payload));
            report.stages = out.stages;
            report.train_accuracy = out.train_accuracy;
            report.test_accuracy = out.test_accuracy;
            const auto sent = endpoint.publish(std::string(link::topics::kModelArtifact),
                                               link::EnvelopeKind::ModelArtifactMsg, encode_model(out.model));
            report.artifact_seq = sent.seq;
            report.status = "ok";
        } catch (const std::exception& e) {
            spdlog::warn("model factory: request seq {} failed: {}", msg->envelope.seq, e.what());
            report.status = "error";
            report.error = e.what();
        }
        endpoint.publish(std::string(link::topics::kModelReport), link::EnvelopeKind::ModelArtifactMsg,
                         encode_model_report(report));
    }
}

BaseStation::BaseStation(ClassifierModel initial) {
    auto pilots = initial.pilot_config;
    current_ = std::make_shared<const Deployment>(Deployment{std::move(initial), std::move(pilots), 1});
}

std::shared_ptr<const Deployment> BaseStation::current() const {
    std::lock_guard lock(mutex_);
    return current_;
}

std::uint64_t BaseStation::deploy(ClassifierModel model) {
    auto pilots = model.pilot_config;
    std::lock_guard lock(mutex_);
    const auto generation = current_->generation + 1;
    current_ = std::make_shared<const Deployment>(Deployment{std::move(model), std::move(pilots), generation});
    return generation;
}

void prepare_base_station_link(link::LinkEndpoint& bs) {
    bs.subscribe(std::string(link::topics::kModelArtifact), mqtt::QoS::AtLeastOnce);
    bs.subscribe(std::string(link::topics::kModelReport), mqtt::QoS::AtLeastOnce);
}

RedeployOutcome request_model(link::LinkEndpoint& bs_link, const PilotConfig& new_pilots, std::uint64_t seed,
                              std::chrono::milliseconds timeout) {
    new_pilots.validate();
    const auto start = Clock::now();
    const auto deadline = start + timeout;

    const auto request = bs_link.publish(
        std::string(link::topics::kModelRequest), link::EnvelopeKind::ModelRequest,
        encode_model_request({new_pilots.n_subcarriers, new_pilots.pilot_indices, new_pilots.label, seed}));

    std::map<std::uint64_t, link::ReceivedEnvelope> artifacts;
    std::optional<ModelReport> report;
    while (!report || (report->artifact_seq && !artifacts.contains(*report->artifact_seq))) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0) throw RedeployError("timed out waiting for the twin's model");
        auto msg = bs_link.poll(left);
        if (!msg) continue;
        if (msg->envelope.topic == link::topics::kModelArtifact) {
            artifacts.emplace(msg->envelope.seq, std::move(*msg));
        } else if (msg->envelope.topic == link::topics::kModelReport) {
            auto r = decode_model_report(msg->envelope.payload);
            if (r.request_seq == request.seq) report = std::move(r);
        }
    }
    if (report->status != "ok" || !report->artifact_seq) {
        throw RedeployError(fmt::format("twin could not build the model: {}", report->error));
    }

    const auto& artifact = artifacts.at(*report->artifact_seq);
    ClassifierModel model = decode_model(artifact.envelope.payload);
    if (model.pilot_config != new_pilots) throw RedeployError("twin returned a model for different pilots");

    RedeployOutcome out;
    out.train_accuracy = report->train_accuracy;
    out.test_accuracy = report->test_accuracy;
    out.model = std::move(model);

    auto& t = out.timing;
    t.data_transfer_s = report->request_transfer_s + us_to_s(artifact.received_at_us - artifact.envelope.sent_at);
    t.data_collection_s = report->stages.data_collection_s;
    t.data_processing_s = report->stages.data_processing_s;
    t.model_creation_s = report->stages.model_creation_s;
    t.total_deployment_s = seconds_since(start);
    return out;
}

RedeployOutcome run_redeploy_pipeline(BaseStation& bs, link::LinkEndpoint& bs_link, const PilotConfig& new_pilots,
                                      std::uint64_t seed, std::chrono::milliseconds timeout) {
    const auto start = Clock::now();
    RedeployOutcome out = request_model(bs_link, new_pilots, seed, timeout);
    out.generation = bs.deploy(out.model);
    out.timing.total_deployment_s = seconds_since(start);
    return out;
}

bool JamDetector::observe(std::size_t predicted_class) {
    if (predicted_class == 0) {
        streak_ = 0;
        return false;
    }
    return ++streak_ == threshold_;
}

DetectionLoop::DetectionLoop(BaseStation& bs, Trigger on_event, std::size_t debounce)
    : bs_(bs), on_event_(std::move(on_event)), detector_(debounce) {}

std::optional<JamEvent> DetectionLoop::process(const SpectrumFrame& frame) {
    const auto deployment = bs_.current();
    if (deployment->generation != last_generation_) {
        // Predictions under the old pilot layout say nothing about the new one.
        detector_.reset();
        last_generation_ = deployment->generation;
    }
    const auto index = frames_++;
    const auto cls = static_cast<std::size_t>(predict(deployment->model, frame).jam_class);
    if (!detector_.observe(cls)) return std::nullopt;

    ++events_;
    JamEvent ev{index, cls, deployment->pilots.pilot_indices[cls - 1], deployment->generation};
    if (on_event_) on_event_(ev, *deployment);
    return ev;
}

std::vector<JamEvent> detect_loop(BaseStation& bs, std::span<const SpectrumFrame> frames) {
    DetectionLoop loop(bs);
    std::vector<JamEvent> events;
    for (const auto& f : frames) {
        if (auto ev = loop.process(f)) events.push_back(*ev);
    }
    return events;
}

}  // namespace twinet::pilot
