#pragma once

#include <string>
#include <vector>

#include "permdet/apk/axml.hpp"

namespace permdet::apk {

inline constexpr uint32_t kNameAttrResId = 0x01010003;
inline constexpr const char* kAndroidNsUri =
    "http://schemas.android.com/apk/res/android";

struct PermissionList {
    // Fully-qualified permission strings, first-occurrence document order,
    // deduplicated.
    std::vector<std::string> permissions;
    std::string source_apk_hash;  // lowercase hex sha256, filled by callers
    size_t warnings = 0;          // missing/ill-typed name attributes
};

// Values of android:name on every uses-permission / uses-permission-sdk-23
// element. The attribute is matched by resource id 0x01010003 when the
// document carries a resource map, by name + namespace URI otherwise.
PermissionList extract_permissions(const ManifestDocument& doc);

}  // namespace permdet::apk
