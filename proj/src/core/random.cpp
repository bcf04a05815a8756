#include "calitr/random.hpp"

namespace calitr {

Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master),
                    static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  Rng rng = make_rng(master, stream);
  return rng();
}

}  // namespace calitr
