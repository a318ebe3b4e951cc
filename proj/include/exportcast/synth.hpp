#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "exportcast/trade_data.hpp"

namespace exportcast {

// Knobs for drawing a random capability world. The defaults give a presence
// density between 0.07 and 0.15 and a five-year persistence P(1 -> 1)
// near 0.65.
struct WorldParams {
  std::size_t n_countries = 100;
  std::size_t n_products = 200;
  std::size_t n_capabilities = 30;
  std::size_t min_requirements = 4;
  std::size_t max_requirements = 8;
  // Requirement sets are redrawn (up to 1000 times) until at least this many
  // countries own them in the first year; traded products have producers.
  std::size_t min_producers = 3;
  // Each country owns each capability initially with a probability drawn
  // uniformly from [endowment_low, endowment_high].
  double endowment_low = 0.55;
  double endowment_high = 0.75;
  // With k > 0 clusters, countries copy one of k archetype endowments and
  // flip each capability with probability `profile_flip`.
  std::size_t profile_clusters = 0;
  double profile_flip = 0.1;
  double noise = 0.6;
  // Year-to-year autocorrelation of the log noise of each cell.
  double noise_persistence = 0.0;
  double acquisition_rate = 0.03;
  // Export level of a country owning only part of a product's requirements,
  // relative to full ownership, per unit of owned fraction.
  double partial_level = 0.00002;
  // Log-scale spread of country sizes, product market sizes and the fixed
  // per-cell intensity of complete cells.
  double size_dispersion = 1.0;
  double market_dispersion = 1.0;
  double intensity_dispersion = 0.3;
  std::uint64_t seed = 0;
};

struct CapabilityWorld {
  std::size_t n_countries = 0;
  std::size_t n_products = 0;
  std::size_t n_capabilities = 0;
  BinaryMatrix country_endowments;    // countries x capabilities, year 0
  BinaryMatrix product_requirements;  // products x capabilities
  double noise = 0.0;                 // in [0, 1); log-scale sd noise / (1 - noise)
  double noise_persistence = 0.0;     // AR(1) coefficient of the log noise, in [0, 1)
  double acquisition_rate = 0.0;      // per missing capability per year
  double partial_level = 0.02;
  Vector country_size;
  Vector product_market;
  Matrix cell_intensity;  // countries x products
  std::uint64_t seed = 0;
};

CapabilityWorld make_world(const WorldParams& params);

// Throws ValidationError on rates out of range or products without
// requirements.
void validate_world(const CapabilityWorld& world);

// A country completing a product's requirement set in `year`.
struct CompletionEvent {
  std::size_t country = 0;
  std::size_t product = 0;
  int year = 0;
};

struct CapabilityEvent {
  std::size_t country = 0;
  std::size_t capability = 0;
  int year = 0;
};

struct SyntheticPanel {
  ExportPanel panel;
  std::vector<BinaryMatrix> endowments;  // one per year
  std::vector<CapabilityEvent> acquisitions;
  std::vector<CompletionEvent> completions;
};

// Year t volume of (c, p) = size_c * market_p * level * exp(e_t) where level
// is the cell intensity when c owns every capability p requires and
// partial_level * owned_fraction otherwise. The log noise follows
// e_t = rho * e_(t-1) + sigma * z_t with sigma = noise / (1 - noise),
// started from its stationary law. Missing capabilities are
// acquired independently with probability acquisition_rate before every
// year after the first.
SyntheticPanel generate_panel(const CapabilityWorld& world, int years,
                              int first_year = 2000);

// (p, q) -> number of capabilities required by both products.
DenseMatrix<int> oracle_relatedness(const CapabilityWorld& world);

// Whether country c owns every capability product p requires.
BinaryMatrix complete_products(const BinaryMatrix& endowments,
                               const BinaryMatrix& requirements);

// Capability matrices and the event logs as one JSON document.
void write_ground_truth(std::ostream& out, const CapabilityWorld& world,
                        const SyntheticPanel& synthetic);

}  // namespace exportcast
