#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roadhawk/common.hpp"

namespace roadhawk {

// The six topics of the two-node system. Node 01 (detection/tracking) owns
// the four command topics; Node 02 (drone driver) owns the two sensor
// topics. Publishing against this matrix is rejected.
enum class Topic { reset = 0, land, cmd_vel, takeoff, navdata, image_raw };

inline constexpr int kTopicCount = 6;

inline const char* topic_name(Topic t) {
    switch (t) {
        case Topic::reset: return "/UAV/reset";
        case Topic::land: return "/UAV/land";
        case Topic::cmd_vel: return "/cmd_vel";
        case Topic::takeoff: return "/UAV/takeoff";
        case Topic::navdata: return "/UAV/navdata";
        case Topic::image_raw: return "/UAV/front/image_raw";
    }
    return "?";
}

// Accepts the unslashed takeoff spelling as an alias.
inline std::optional<Topic> parse_topic(std::string_view name) {
    for (int i = 0; i < kTopicCount; ++i) {
        const Topic t = static_cast<Topic>(i);
        if (name == topic_name(t)) return t;
    }
    if (name == "/UAVtakeoff") return Topic::takeoff;
    return std::nullopt;
}

enum class NodeId { node01 = 1, node02 = 2 };

inline bool can_publish(NodeId node, Topic topic) {
    switch (topic) {
        case Topic::reset:
        case Topic::land:
        case Topic::cmd_vel:
        case Topic::takeoff:
            return node == NodeId::node01;
        case Topic::navdata:
        case Topic::image_raw:
            return node == NodeId::node02;
    }
    return false;
}

struct Envelope {
    Topic topic = Topic::reset;
    NodeId publisher = NodeId::node01;
    uint64_t seq = 0;  // strictly increasing per (publisher, topic)
    double sim_time = 0;
    std::shared_ptr<const std::vector<uint8_t>> payload;
};

// Per-subscriber FIFO queue. Image subscriptions are bounded and drop the
// oldest frame, modeling a video stream; everything else is lossless.
class Subscription {
public:
    explicit Subscription(size_t capacity) : capacity_(capacity) {}

    std::optional<Envelope> poll() {
        std::lock_guard<std::mutex> lock(mu_);
        if (q_.empty()) return std::nullopt;
        Envelope e = std::move(q_.front());
        q_.pop_front();
        return e;
    }

    size_t pending() const {
        std::lock_guard<std::mutex> lock(mu_);
        return q_.size();
    }

    uint64_t dropped() const {
        std::lock_guard<std::mutex> lock(mu_);
        return dropped_;
    }

private:
    friend class Bus;

    void push(const Envelope& e) {
        std::lock_guard<std::mutex> lock(mu_);
        if (capacity_ > 0 && q_.size() >= capacity_) {
            q_.pop_front();
            ++dropped_;
        }
        q_.push_back(e);
    }

    mutable std::mutex mu_;
    std::deque<Envelope> q_;
    size_t capacity_;  // 0 = unbounded
    uint64_t dropped_ = 0;
};

class Bus {
public:
    static constexpr size_t kImageQueueCapacity = 2;

    std::shared_ptr<Subscription> subscribe(Topic topic) {
        const size_t cap = topic == Topic::image_raw ? kImageQueueCapacity : 0;
        auto sub = std::make_shared<Subscription>(cap);
        std::lock_guard<std::mutex> lock(mu_);
        subs_[static_cast<int>(topic)].push_back(sub);
        return sub;
    }

    // Delivers to every current subscriber in publication order and returns
    // the assigned sequence number. Unauthorized pairs are rejected.
    uint64_t publish(NodeId publisher, Topic topic, double sim_time,
                     std::vector<uint8_t> payload) {
        if (!can_publish(publisher, topic))
            throw ConfigError(std::string("publisher not authorized for ") + topic_name(topic));
        Envelope e;
        e.topic = topic;
        e.publisher = publisher;
        e.sim_time = sim_time;
        e.payload = std::make_shared<const std::vector<uint8_t>>(std::move(payload));

        std::vector<std::shared_ptr<Subscription>> targets;
        {
            std::lock_guard<std::mutex> lock(mu_);
            e.seq = seq_[static_cast<int>(publisher)][static_cast<int>(topic)]++;
            targets = subs_[static_cast<int>(topic)];
            for (const auto& sub : targets) sub->push(e);
        }
        return e.seq;
    }

private:
    mutable std::mutex mu_;
    std::array<std::array<uint64_t, kTopicCount>, 3> seq_{};  // [publisher][topic]
    std::array<std::vector<std::shared_ptr<Subscription>>, kTopicCount> subs_;
};

}  // namespace roadhawk
