#pragma once

#include <memory>

#include "dialogic/gateway.hpp"

namespace dialogic {

// Deterministic provider for the three built-in prompts, usable without a
// network. Topic titles come from catalog keywords in the survivor text,
// the common-topics reply lists the most frequent titles, and question
// types follow the wh-word rule.
std::shared_ptr<MockProvider> make_offline_mock();

}  // namespace dialogic
