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

#include "compatlab/registry.hpp"

#include <algorithm>
#include <cstdio>

#include "compatlab/error.hpp"

namespace compatlab {

void validate_profile(const DeviceProfile& profile) {
    if (profile.brand.empty()) {
        throw ValidationError("device profile: brand must be nonempty");
    }
    if (profile.model.empty()) {
        throw ValidationError("device profile: model must be nonempty");
    }
    if (profile.api_level < kMinApiLevel || profile.api_level > kMaxApiLevel) {
        throw ValidationError("device profile: api_level " +
                              std::to_string(profile.api_level) +
                              " outside [1, 64]");
    }
    if (profile.screen_w <= 0 || profile.screen_h <= 0) {
        throw ValidationError("device profile: screen dimensions must be > 0");
    }
}

namespace {

// Ids carry nothing derived from the profile: just a zero-padded serial.
DeviceId format_device_id(std::uint64_t serial) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "dev-%06llu",
                  static_cast<unsigned long long>(serial));
    return buf;
}

}  // namespace

DeviceId DeviceRegistry::register_device(const DeviceProfile& profile) {
    validate_profile(profile);
    std::lock_guard lock(mutex_);
    DeviceId id = format_device_id(next_serial_++);
    index_.emplace(id, devices_.size());
    devices_.emplace_back(id, profile);
    return id;
}

DeviceProfile DeviceRegistry::profile(const DeviceId& id) const {
    std::lock_guard lock(mutex_);
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw ValidationError("unknown device id: " + id);
    }
    return devices_[it->second].second;
}

bool DeviceRegistry::contains(const DeviceId& id) const {
    std::lock_guard lock(mutex_);
    return index_.count(id) > 0;
}

std::size_t DeviceRegistry::size() const {
    std::lock_guard lock(mutex_);
    return devices_.size();
}

std::vector<DeviceId> DeviceRegistry::device_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<DeviceId> ids;
    ids.reserve(devices_.size());
    for (const auto& [id, profile] : devices_) {
        ids.push_back(id);
    }
    return ids;
}

std::vector<DeviceCluster> DeviceRegistry::cluster_devices() const {
    std::lock_guard lock(mutex_);
    std::map<ClusterKey, std::vector<DeviceId>> groups;
    for (const auto& [id, profile] : devices_) {
        groups[{profile.brand, profile.model, profile.api_level}].push_back(id);
    }
    std::vector<DeviceCluster> clusters;
    clusters.reserve(groups.size());
    for (auto& [key, members] : groups) {
        clusters.push_back({key, std::move(members)});
    }
    return clusters;
}

}  // namespace compatlab
