#include "permdet/apk/permissions.hpp"

#include <unordered_set>

namespace permdet::apk {

namespace {

bool is_permission_element(const AxmlElement& e) {
    return e.name == "uses-permission" || e.name == "uses-permission-sdk-23";
}

bool is_name_attribute(const ManifestDocument& doc, const AxmlAttribute& attr) {
    if (doc.has_resource_map() && attr.resource_id.has_value())
        return *attr.resource_id == kNameAttrResId;
    if (attr.name_idx >= doc.pool.strings.size()) return false;
    if (doc.pool.strings[attr.name_idx] != "name") return false;
    if (attr.ns_idx == kNoEntry || attr.ns_idx >= doc.pool.strings.size()) return false;
    return doc.pool.strings[attr.ns_idx] == kAndroidNsUri;
}

// String value of a typed attribute, or nullopt when it is not a string.
std::optional<std::string> string_value(const ManifestDocument& doc,
                                        const AxmlAttribute& attr) {
    uint32_t idx = attr.raw_value_idx;
    if (attr.value_type == kTypeString && idx == kNoEntry) idx = attr.value_data;
    if (attr.value_type != kTypeString && idx == kNoEntry) return std::nullopt;
    if (idx >= doc.pool.strings.size()) return std::nullopt;
    return doc.pool.strings[idx];
}

}  // namespace

PermissionList extract_permissions(const ManifestDocument& doc) {
    PermissionList out;
    std::unordered_set<std::string> seen;
    for (const AxmlElement& elem : doc.elements) {  // arena is document order
        if (!is_permission_element(elem)) continue;
        bool found = false;
        for (const AxmlAttribute& attr : elem.attributes) {
            if (!is_name_attribute(doc, attr)) continue;
            auto value = string_value(doc, attr);
            if (!value || value->empty()) {
                ++out.warnings;
            } else if (seen.insert(*value).second) {
                out.permissions.push_back(*value);
            }
            found = true;
            break;
        }
        if (!found) ++out.warnings;  // element without a usable android:name
    }
    return out;
}

}  // namespace permdet::apk
