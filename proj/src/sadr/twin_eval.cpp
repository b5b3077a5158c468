#include "twinet/sadr/twin_eval.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <numeric>

namespace twinet::sadr {

using json = nlohmann::ordered_json;

namespace {

std::vector<std::uint8_t> dump(const json& j) {
    const std::string s = j.dump();
    return {s.begin(), s.end()};
}

template <typename F>
auto parse(std::span<const std::uint8_t> payload, const char* what, F&& f) {
    try {
        return f(json::parse(payload.begin(), payload.end()));
    } catch (const json::exception& e) {
        throw link::EnvelopeError(fmt::format("bad {}: {}", what, e.what()));
    }
}

}  // namespace

std::vector<std::uint8_t> encode_eval_request(const EvalRequest& r) {
    json j;
    j["request_id"] = r.request_id;
    j["rates_mbps"] = r.rates_mbps;
    j["horizon_ticks"] = r.horizon_ticks;
    return dump(j);
}

EvalRequest decode_eval_request(std::span<const std::uint8_t> payload) {
    return parse(payload, "eval request", [](const json& j) {
        return EvalRequest{j.at("request_id").get<std::uint64_t>(), j.at("rates_mbps").get<std::vector<double>>(),
                           j.at("horizon_ticks").get<std::size_t>()};
    });
}

std::vector<std::uint8_t> encode_eval_result(const TwinEvaluation& e) {
    json j;
    j["request_id"] = e.request_id;
    j["twin_reward"] = e.twin_reward;
    j["per_tick_rewards"] = e.per_tick_rewards;
    return dump(j);
}

TwinEvaluation decode_eval_result(std::span<const std::uint8_t> payload) {
    return parse(payload, "eval result", [](const json& j) {
        return TwinEvaluation{j.at("request_id").get<std::uint64_t>(), j.at("twin_reward").get<double>(),
                              j.at("per_tick_rewards").get<std::vector<double>>()};
    });
}

TwinEvaluation twin_evaluate(netsim::Simulator& twin, std::uint64_t request_id, std::span<const double> rates,
                             std::size_t horizon, std::vector<netsim::NetworkState>* log) {
    twin.launch(rates);
    TwinEvaluation eval{request_id, 0.0, {}};
    eval.per_tick_rewards.reserve(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        auto state = twin.step_tick();
        eval.per_tick_rewards.push_back(per_tick_reward(state));
        if (log) log->push_back(std::move(state));
    }
    if (horizon > 0) {
        eval.twin_reward = std::accumulate(eval.per_tick_rewards.begin(), eval.per_tick_rewards.end(), 0.0) /
                           static_cast<double>(horizon);
    }
    return eval;
}

TwinEvaluation TwinEvalService::evaluate(const EvalRequest& req) const {
    auto cfg = config_;
    cfg.seed = mix_seed(config_.seed, req.request_id);
    netsim::Simulator twin(cfg);
    return twin_evaluate(twin, req.request_id, req.rates_mbps, req.horizon_ticks);
}

void TwinEvalService::serve(link::LinkEndpoint& endpoint, const std::atomic<bool>& stop) const {
    endpoint.subscribe(std::string(link::topics::kRealRequest), mqtt::QoS::AtLeastOnce);
    while (!stop.load()) {
        auto msg = endpoint.poll(std::chrono::milliseconds{20});
        if (!msg || msg->envelope.topic != link::topics::kRealRequest ||
            msg->envelope.kind != link::EnvelopeKind::EvalRequest) {
            continue;
        }
        try {
            const auto result = evaluate(decode_eval_request(msg->envelope.payload));
            endpoint.publish(std::string(link::topics::kEvalResult), link::EnvelopeKind::EvalResult,
                             encode_eval_result(result));
        } catch (const std::exception& e) {
            spdlog::warn("twin eval: dropping request seq {}: {}", msg->envelope.seq, e.what());
        }
    }
}

bool LocalEvalTransport::submit(const TrafficRequest& req, std::size_t horizon) {
    done_[req.request_id] = service_.evaluate({req.request_id, req.risk_vector, horizon});
    return true;
}

std::optional<TwinEvaluation> LocalEvalTransport::await(std::uint64_t request_id, std::chrono::milliseconds) {
    auto node = done_.extract(request_id);
    if (!node) return std::nullopt;
    return std::move(node.mapped());
}

LinkEvalTransport::LinkEvalTransport(link::LinkEndpoint& real) : real_(real) {
    real_.subscribe(std::string(link::topics::kEvalResult), mqtt::QoS::AtLeastOnce);
}

bool LinkEvalTransport::submit(const TrafficRequest& req, std::size_t horizon) {
    try {
        real_.publish(std::string(link::topics::kRealRequest), link::EnvelopeKind::EvalRequest,
                      encode_eval_request({req.request_id, req.risk_vector, horizon}));
        return true;
    } catch (const link::LinkError& e) {
        spdlog::warn("sadr link: request {} not sent: {}", req.request_id, e.what());
        return false;
    }
}

std::optional<TwinEvaluation> LinkEvalTransport::await(std::uint64_t request_id, std::chrono::milliseconds timeout) {
    if (auto node = early_.extract(request_id)) return std::move(node.mapped());
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
        const auto left =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        std::optional<link::ReceivedEnvelope> msg;
        try {
            msg = real_.wait_for(link::topics::kEvalResult, left);
        } catch (const link::LinkError& e) {
            spdlog::warn("sadr link: lost broker while awaiting {}: {}", request_id, e.what());
            return std::nullopt;
        }
        if (!msg) break;
        try {
            auto eval = decode_eval_result(msg->envelope.payload);
            if (eval.request_id == request_id) return eval;
            early_[eval.request_id] = std::move(eval);
        } catch (const link::EnvelopeError& e) {
            spdlog::warn("sadr link: bad eval result: {}", e.what());
        }
    }
    return std::nullopt;
}

}  // namespace twinet::sadr
