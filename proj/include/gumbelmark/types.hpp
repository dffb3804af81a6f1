#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gumbelmark {

using TokenId = std::uint32_t;

// Raised when a caller breaks an operation's precondition.
class ContractError : public std::invalid_argument {
public:
    explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

struct SecretKey {
    std::uint64_t value = 0;

    friend bool operator==(SecretKey a, SecretKey b) { return a.value == b.value; }
};

inline void require(bool ok, const char* msg) {
    if (!ok) throw ContractError(msg);
}

}  // namespace gumbelmark
