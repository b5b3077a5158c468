#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "twinet/link/endpoint.hpp"
#include "twinet/netsim/simulator.hpp"
#include "twinet/sadr/controller.hpp"
#include "twinet/util/seed.hpp"

namespace twinet::sadr {

struct EvalRequest {
    std::uint64_t request_id = 0;
    std::vector<double> rates_mbps;
    std::size_t horizon_ticks = 50;
};

std::vector<std::uint8_t> encode_eval_request(const EvalRequest& r);
EvalRequest decode_eval_request(std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> encode_eval_result(const TwinEvaluation& e);
TwinEvaluation decode_eval_result(std::span<const std::uint8_t> payload);

/// Launches `rates` on the twin and runs `horizon` ticks. The reward is the
/// mean per-tick reward over those ticks; `log`, when given, receives every
/// emitted state.
TwinEvaluation twin_evaluate(netsim::Simulator& twin, std::uint64_t request_id, std::span<const double> rates,
                             std::size_t horizon, std::vector<netsim::NetworkState>* log = nullptr);

/// Twin-side evaluator. Each request gets a fresh simulator seeded from the
/// twin scenario seed and the request id, so results do not depend on the
/// order requests arrive in.
class TwinEvalService {
public:
    explicit TwinEvalService(netsim::ScenarioConfig twin_config) : config_(twin_config) {}

    TwinEvaluation evaluate(const EvalRequest& req) const;

    /// Answers EvalRequests arriving on the real-request topic until `stop`
    /// is set. The endpoint must be connected; serve() subscribes it.
    void serve(link::LinkEndpoint& endpoint, const std::atomic<bool>& stop) const;

    const netsim::ScenarioConfig& config() const noexcept { return config_; }

private:
    netsim::ScenarioConfig config_;
};

/// How the controller reaches the twin.
class EvalTransport {
public:
    virtual ~EvalTransport() = default;
    virtual bool submit(const TrafficRequest& req, std::size_t horizon) = 0;
    virtual std::optional<TwinEvaluation> await(std::uint64_t request_id, std::chrono::milliseconds timeout) = 0;
};

/// In-process evaluation; no broker involved.
class LocalEvalTransport final : public EvalTransport {
public:
    explicit LocalEvalTransport(netsim::ScenarioConfig twin_config) : service_(twin_config) {}
    bool submit(const TrafficRequest& req, std::size_t horizon) override;
    std::optional<TwinEvaluation> await(std::uint64_t request_id, std::chrono::milliseconds timeout) override;

private:
    TwinEvalService service_;
    std::map<std::uint64_t, TwinEvaluation> done_;
};

/// Evaluation over the link: publishes on the real-request topic and waits
/// for the matching EvalResult.
class LinkEvalTransport final : public EvalTransport {
public:
    /// Subscribes `real` to the eval-result topic.
    explicit LinkEvalTransport(link::LinkEndpoint& real);
    bool submit(const TrafficRequest& req, std::size_t horizon) override;
    std::optional<TwinEvaluation> await(std::uint64_t request_id, std::chrono::milliseconds timeout) override;

private:
    link::LinkEndpoint& real_;
    std::map<std::uint64_t, TwinEvaluation> early_;
};

}  // namespace twinet::sadr
