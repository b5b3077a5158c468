#include <gtest/gtest.h>

#include <thread>

#include "twinet/broker/broker.hpp"
#include "twinet/broker/tcp_broker.hpp"
#include "twinet/link/mqtt_client.hpp"
#include "twinet/mqtt/codec.hpp"

using namespace twinet;
using namespace twinet::broker;
using mqtt::QoS;

namespace {

struct FakeSink : SessionSink {
    std::vector<mqtt::ControlPacket> sent;
    bool closed = false;
    bool send(const mqtt::Bytes& frame) override {
        if (closed) return false;
        sent.push_back(mqtt::decode_packet(frame));
        return true;
    }
    void close() override { closed = true; }

    std::vector<mqtt::Publish> publishes() const {
        std::vector<mqtt::Publish> out;
        for (const auto& p : sent)
            if (auto* pub = std::get_if<mqtt::Publish>(&p)) out.push_back(*pub);
        return out;
    }
};

struct Client {
    std::shared_ptr<FakeSink> sink = std::make_shared<FakeSink>();
    std::shared_ptr<Session> session;

    Client(BrokerCore& core, const std::string& id) : session(core.open(sink)) {
        EXPECT_TRUE(core.on_packet(*session, mqtt::Connect{id}));
    }
};

}  // namespace

TEST(SubscriptionTable, HighestQosPerClient) {
    SubscriptionTable t;
    t.subscribe("c1", mqtt::TopicFilter::parse("a/+"), QoS::AtMostOnce);
    t.subscribe("c1", mqtt::TopicFilter::parse("a/b"), QoS::AtLeastOnce);
    t.subscribe("c2", mqtt::TopicFilter::parse("#"), QoS::AtMostOnce);
    EXPECT_EQ(t.match("a/b"), (std::vector<Delivery>{{"c1", QoS::AtLeastOnce}, {"c2", QoS::AtMostOnce}}));
    EXPECT_EQ(t.match("a/c"), (std::vector<Delivery>{{"c1", QoS::AtMostOnce}, {"c2", QoS::AtMostOnce}}));
    // Same filter text replaces.
    t.subscribe("c1", mqtt::TopicFilter::parse("a/b"), QoS::AtMostOnce);
    EXPECT_EQ(t.filter_count("c1"), 2u);
    t.remove_client("c1");
    EXPECT_EQ(t.match("a/b"), (std::vector<Delivery>{{"c2", QoS::AtMostOnce}}));
}

TEST(BrokerCore, DeliversOnceToWildcardSubscriber) {
    BrokerCore core;
    Client sub(core, "sub"), pub(core, "pub");
    core.on_packet(*sub.session, mqtt::Subscribe{1, {{"twin/#", QoS::AtMostOnce}}});
    core.on_packet(*pub.session, mqtt::Publish{"twin/state", {1}, QoS::AtMostOnce, std::nullopt});
    ASSERT_EQ(sub.sink->publishes().size(), 1u);
    EXPECT_EQ(sub.sink->publishes()[0].topic, "twin/state");
    EXPECT_TRUE(pub.sink->publishes().empty());
}

TEST(BrokerCore, OverlappingFiltersDeliverOnceAtHighestQos) {
    BrokerCore core;
    Client sub(core, "sub"), pub(core, "pub");
    core.on_packet(*sub.session, mqtt::Subscribe{1, {{"a/+", QoS::AtMostOnce}, {"a/b", QoS::AtLeastOnce}}});
    core.on_packet(*pub.session, mqtt::Publish{"a/b", {7}, QoS::AtLeastOnce, 5});
    const auto got = sub.sink->publishes();
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].qos, QoS::AtLeastOnce);
    EXPECT_TRUE(got[0].packet_id.has_value());
}

TEST(BrokerCore, QosDowngradedToSubscription) {
    BrokerCore core;
    Client sub(core, "sub"), pub(core, "pub");
    core.on_packet(*sub.session, mqtt::Subscribe{1, {{"x", QoS::AtMostOnce}}});
    core.on_packet(*pub.session, mqtt::Publish{"x", {}, QoS::AtLeastOnce, 9});
    ASSERT_EQ(sub.sink->publishes().size(), 1u);
    EXPECT_EQ(sub.sink->publishes()[0].qos, QoS::AtMostOnce);
}

TEST(BrokerCore, NoSubscriberStillAcked) {
    BrokerCore core;
    Client pub(core, "pub");
    core.on_packet(*pub.session, mqtt::Publish{"nobody", {}, QoS::AtLeastOnce, 42});
    ASSERT_FALSE(pub.sink->sent.empty());
    EXPECT_EQ(pub.sink->sent.back(), mqtt::ControlPacket{mqtt::PubAck{42}});
    EXPECT_EQ(core.stats().publishes_routed, 0u);
    EXPECT_EQ(core.stats().publishes_received, 1u);
}

TEST(BrokerCore, InvalidFilterGetsFailureCode) {
    BrokerCore core;
    Client sub(core, "sub");
    core.on_packet(*sub.session, mqtt::Subscribe{3, {{"a/#/b", QoS::AtMostOnce}, {"ok", QoS::AtLeastOnce}}});
    EXPECT_EQ(sub.sink->sent.back(), mqtt::ControlPacket{(mqtt::SubAck{3, {mqtt::kSubscriptionFailure, 1}})});
}

TEST(BrokerCore, PacketBeforeConnectClosesSession) {
    BrokerCore core;
    auto sink = std::make_shared<FakeSink>();
    auto s = core.open(sink);
    EXPECT_FALSE(core.on_packet(*s, mqtt::PingReq{}));
    EXPECT_EQ(core.stats().protocol_errors, 1u);
    core.on_closed(*s);
}

TEST(BrokerCore, DuplicateClientIdEvictsOlderSession) {
    BrokerCore core;
    Client first(core, "same");
    core.on_packet(*first.session, mqtt::Subscribe{1, {{"t", QoS::AtMostOnce}}});
    Client second(core, "same");
    EXPECT_TRUE(first.sink->closed);
    EXPECT_EQ(core.session_count(), 1u);
    EXPECT_EQ(core.subscription_count("same"), 0u);
    EXPECT_EQ(core.stats().sessions_evicted, 1u);
    // The old transport reporting its close must not drop the new session.
    core.on_closed(*first.session);
    EXPECT_EQ(core.session_count(), 1u);
}

TEST(BrokerCore, CleanUpOnClose) {
    BrokerCore core;
    Client c(core, "gone");
    core.on_packet(*c.session, mqtt::Subscribe{1, {{"#", QoS::AtMostOnce}}});
    core.on_closed(*c.session);
    EXPECT_EQ(core.session_count(), 0u);
    EXPECT_EQ(core.subscription_count("gone"), 0u);
}

TEST(TcpBroker, PublishSubscribeOverLoopback) {
    TcpBroker broker(net::Endpoint{"127.0.0.1", 0});
    broker.start();
    link::MqttClient sub({broker.endpoint(), "sub"});
    link::MqttClient pub({broker.endpoint(), "pub"});
    sub.connect();
    pub.connect();
    EXPECT_EQ(sub.subscribe({{"dt/#", QoS::AtLeastOnce}}), (std::vector<std::uint8_t>{1}));
    for (std::uint8_t i = 0; i < 20; ++i) pub.publish("dt/x", {i}, QoS::AtLeastOnce);
    for (std::uint8_t i = 0; i < 20; ++i) {
        auto m = sub.poll(std::chrono::milliseconds{2000});
        ASSERT_TRUE(m);
        EXPECT_EQ(m->topic, "dt/x");
        EXPECT_EQ(m->payload, (mqtt::Bytes{i}));
    }
    pub.ping();
    sub.disconnect();
    pub.disconnect();
    broker.stop();
    EXPECT_EQ(broker.stats().deliveries, 20u);
}

TEST(TcpBroker, MalformedFrameDropsOnlyThatConnection) {
    TcpBroker broker(net::Endpoint{"127.0.0.1", 0});
    broker.start();
    link::MqttClient good({broker.endpoint(), "good"});
    good.connect();

    auto raw = net::connect_tcp(broker.endpoint(), std::chrono::milliseconds{1000});
    const std::uint8_t junk[] = {0x00, 0x00};
    ASSERT_TRUE(raw.send_all(junk));
    std::uint8_t byte;
    EXPECT_FALSE(raw.recv_exact({&byte, 1}));  // broker hangs up

    EXPECT_NO_THROW(good.ping());
    good.disconnect();
    broker.stop();
    EXPECT_GE(broker.stats().protocol_errors, 1u);
}

TEST(TcpBroker, BindFailureSurfaces) {
    TcpBroker a(net::Endpoint{"127.0.0.1", 0});
    a.start();
    TcpBroker b(net::Endpoint{"127.0.0.1", a.port()});
    EXPECT_THROW(b.start(), net::NetError);
    a.stop();
}
