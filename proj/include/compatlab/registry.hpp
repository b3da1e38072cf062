/*
 * Copyright 2026 The compatlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

namespace compatlab {

/// Anonymous per-registration identifier ("dev-000001", "dev-000002", ...).
using DeviceId = std::string;

/// Hardware and locale attributes reported by a device when it joins.
struct DeviceProfile {
    std::string brand;
    std::string model;
    int api_level = 0;
    std::string soc;
    std::string language;  // BCP-47 tag
    int screen_w = 0;
    int screen_h = 0;

    bool operator==(const DeviceProfile&) const = default;
};

inline constexpr int kMinApiLevel = 1;
inline constexpr int kMaxApiLevel = 64;

/// Throws ValidationError if the profile breaks an invariant.
void validate_profile(const DeviceProfile& profile);

/// Equivalence class key for allocation: devices sharing brand, model and
/// API level are interchangeable test targets.
struct ClusterKey {
    std::string brand;
    std::string model;
    int api_level = 0;

    auto operator<=>(const ClusterKey&) const = default;
};

struct DeviceCluster {
    ClusterKey key;
    std::vector<DeviceId> members;  // registration order

    bool operator==(const DeviceCluster&) const = default;
};

/// Fleet roster. Assigns anonymous ids and groups devices into clusters.
///
/// register_device is safe to call from multiple threads; cluster_devices
/// and lookups read a consistent snapshot.
class DeviceRegistry {
public:
    DeviceRegistry() = default;

    /// Records a device and returns its fresh identifier.
    DeviceId register_device(const DeviceProfile& profile);

    /// Profile lookup; throws ValidationError for unknown ids.
    DeviceProfile profile(const DeviceId& id) const;

    bool contains(const DeviceId& id) const;

    std::size_t size() const;

    /// Registered ids in registration order.
    std::vector<DeviceId> device_ids() const;

    /// Partition of the fleet into profile clusters, ordered by key.
    /// Members keep their registration order.
    std::vector<DeviceCluster> cluster_devices() const;

private:
    mutable std::mutex mutex_;
    std::vector<std::pair<DeviceId, DeviceProfile>> devices_;
    std::map<DeviceId, std::size_t> index_;
    std::uint64_t next_serial_ = 1;
};

}  // namespace compatlab
