#include "exportcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <json.hpp>

namespace exportcast {

namespace {

std::string padded(const char* prefix, std::size_t i, std::size_t n) {
  const int width = static_cast<int>(std::to_string(n > 0 ? n - 1 : 0).size());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

void validate_world(const CapabilityWorld& w) {
  if (w.n_countries == 0 || w.n_products == 0 || w.n_capabilities == 0) {
    throw ValidationError("world needs countries, products and capabilities");
  }
  if (!(w.noise >= 0.0 && w.noise < 1.0)) {
    throw ValidationError("noise must lie in [0, 1)");
  }
  if (!(w.noise_persistence >= 0.0 && w.noise_persistence < 1.0)) {
    throw ValidationError("noise_persistence must lie in [0, 1)");
  }
  if (!(w.acquisition_rate >= 0.0 && w.acquisition_rate <= 1.0)) {
    throw ValidationError("acquisition_rate must lie in [0, 1]");
  }
  if (!(w.partial_level >= 0.0)) throw ValidationError("partial_level must be >= 0");
  const auto nc = static_cast<Eigen::Index>(w.n_countries);
  const auto np = static_cast<Eigen::Index>(w.n_products);
  const auto nk = static_cast<Eigen::Index>(w.n_capabilities);
  if (w.country_endowments.rows() != nc || w.country_endowments.cols() != nk ||
      w.product_requirements.rows() != np || w.product_requirements.cols() != nk ||
      w.country_size.size() != nc || w.product_market.size() != np ||
      w.cell_intensity.rows() != nc || w.cell_intensity.cols() != np) {
    throw ValidationError("world matrices have inconsistent shapes");
  }
  for (Eigen::Index p = 0; p < np; ++p) {
    if (w.product_requirements.row(p).cast<int>().sum() == 0) {
      throw ValidationError("product " + std::to_string(p) + " requires no capability");
    }
  }
}

CapabilityWorld make_world(const WorldParams& params) {
  if (params.min_requirements < 1 || params.min_requirements > params.max_requirements ||
      params.max_requirements > params.n_capabilities) {
    throw ValidationError("requirement counts must satisfy 1 <= min <= max <= capabilities");
  }
  if (!(params.endowment_low >= 0.0 && params.endowment_low <= params.endowment_high &&
        params.endowment_high <= 1.0)) {
    throw ValidationError("endowment probabilities must satisfy 0 <= low <= high <= 1");
  }
  Engine rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  CapabilityWorld w;
  w.n_countries = params.n_countries;
  w.n_products = params.n_products;
  w.n_capabilities = params.n_capabilities;
  w.noise = params.noise;
  w.noise_persistence = params.noise_persistence;
  w.acquisition_rate = params.acquisition_rate;
  w.partial_level = params.partial_level;
  w.seed = params.seed;
  const auto nc = static_cast<Eigen::Index>(params.n_countries);
  const auto np = static_cast<Eigen::Index>(params.n_products);
  const auto nk = static_cast<Eigen::Index>(params.n_capabilities);

  auto draw_profile = [&]() {
    const double q = params.endowment_low +
                     (params.endowment_high - params.endowment_low) * unit(rng);
    BinaryVector row(nk);
    for (Eigen::Index k = 0; k < nk; ++k) row(k) = unit(rng) < q ? 1 : 0;
    return row;
  };
  w.country_endowments.resize(nc, nk);
  if (params.profile_clusters > 0) {
    std::vector<BinaryVector> archetypes;
    for (std::size_t a = 0; a < params.profile_clusters; ++a) archetypes.push_back(draw_profile());
    std::uniform_int_distribution<std::size_t> pick(0, params.profile_clusters - 1);
    for (Eigen::Index c = 0; c < nc; ++c) {
      BinaryVector row = archetypes[pick(rng)];
      for (Eigen::Index k = 0; k < nk; ++k) {
        if (unit(rng) < params.profile_flip) row(k) = row(k) ? 0 : 1;
      }
      w.country_endowments.row(c) = row.transpose();
    }
  } else {
    for (Eigen::Index c = 0; c < nc; ++c) w.country_endowments.row(c) = draw_profile().transpose();
  }

  w.product_requirements = BinaryMatrix::Zero(np, nk);
  std::uniform_int_distribution<std::size_t> req_count(params.min_requirements,
                                                       params.max_requirements);
  std::vector<std::size_t> caps(params.n_capabilities);
  const DenseMatrix<int> owned = w.country_endowments.cast<int>();
  for (Eigen::Index p = 0; p < np; ++p) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::iota(caps.begin(), caps.end(), std::size_t{0});
      const std::size_t r = req_count(rng);
      for (std::size_t i = 0; i < r; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, caps.size() - 1);
        std::swap(caps[i], caps[pick(rng)]);
      }
      std::size_t producers = 0;
      for (Eigen::Index c = 0; c < nc; ++c) {
        bool all = true;
        for (std::size_t i = 0; i < r && all; ++i) all = owned(c, static_cast<Eigen::Index>(caps[i])) != 0;
        producers += all ? 1 : 0;
      }
      if (producers >= params.min_producers || attempt == 999) {
        for (std::size_t i = 0; i < r; ++i) w.product_requirements(p, static_cast<Eigen::Index>(caps[i])) = 1;
        break;
      }
    }
  }

  w.country_size.resize(nc);
  for (Eigen::Index c = 0; c < nc; ++c) {
    w.country_size(c) = std::exp(params.size_dispersion * gauss(rng));
  }
  w.product_market.resize(np);
  for (Eigen::Index p = 0; p < np; ++p) {
    w.product_market(p) = std::exp(params.market_dispersion * gauss(rng));
  }
  w.cell_intensity.resize(nc, np);
  for (Eigen::Index c = 0; c < nc; ++c) {
    for (Eigen::Index p = 0; p < np; ++p) {
      w.cell_intensity(c, p) = std::exp(params.intensity_dispersion * gauss(rng));
    }
  }
  validate_world(w);
  return w;
}

BinaryMatrix complete_products(const BinaryMatrix& endowments,
                               const BinaryMatrix& requirements) {
  const DenseMatrix<int> owned =
      endowments.cast<int>() * requirements.cast<int>().transpose();
  const Eigen::RowVectorXi needed = requirements.cast<int>().rowwise().sum().transpose();
  BinaryMatrix out(owned.rows(), owned.cols());
  for (Eigen::Index c = 0; c < owned.rows(); ++c) {
    for (Eigen::Index p = 0; p < owned.cols(); ++p) {
      out(c, p) = owned(c, p) == needed(p) ? 1 : 0;
    }
  }
  return out;
}

SyntheticPanel generate_panel(const CapabilityWorld& world, int years, int first_year) {
  validate_world(world);
  if (years < 2) throw ValidationError("a synthetic panel needs at least 2 years");
  // The generation stream is independent of the one that drew the world.
  Engine rng(derive_seed(world.seed, {0x70616e656cULL}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto nc = static_cast<Eigen::Index>(world.n_countries);
  const auto np = static_cast<Eigen::Index>(world.n_products);
  const auto nk = static_cast<Eigen::Index>(world.n_capabilities);
  const Eigen::VectorXd required =
      world.product_requirements.cast<double>().rowwise().sum();
  const Matrix req = world.product_requirements.cast<double>();

  std::vector<int> year_list(static_cast<std::size_t>(years));
  std::iota(year_list.begin(), year_list.end(), first_year);
  std::vector<std::string> countries;
  std::vector<std::string> products;
  for (std::size_t c = 0; c < world.n_countries; ++c) countries.push_back(padded("C", c, world.n_countries));
  for (std::size_t p = 0; p < world.n_products; ++p) products.push_back(padded("P", p, world.n_products));

  std::vector<Matrix> values;
  std::vector<BinaryMatrix> endowments;
  std::vector<CapabilityEvent> acquisitions;
  std::vector<CompletionEvent> completions;
  const double rho = world.noise_persistence;
  const double sigma = world.noise / (1.0 - world.noise);
  const double stationary_sd = sigma / std::sqrt(1.0 - rho * rho);
  Matrix log_noise = Matrix::Zero(nc, np);
  BinaryMatrix owned = world.country_endowments;
  BinaryMatrix complete = complete_products(owned, world.product_requirements);
  for (int t = 0; t < years; ++t) {
    const int year = first_year + t;
    if (t > 0) {
      for (Eigen::Index c = 0; c < nc; ++c) {
        for (Eigen::Index k = 0; k < nk; ++k) {
          if (owned(c, k) == 0 && unit(rng) < world.acquisition_rate) {
            owned(c, k) = 1;
            acquisitions.push_back({static_cast<std::size_t>(c), static_cast<std::size_t>(k), year});
          }
        }
      }
      const BinaryMatrix now = complete_products(owned, world.product_requirements);
      for (Eigen::Index c = 0; c < nc; ++c) {
        for (Eigen::Index p = 0; p < np; ++p) {
          if (now(c, p) && !complete(c, p)) {
            completions.push_back({static_cast<std::size_t>(c), static_cast<std::size_t>(p), year});
          }
        }
      }
      complete = now;
    }
    const Matrix fraction =
        (owned.cast<double>() * req.transpose()).array().rowwise() / required.transpose().array();
    Matrix v(nc, np);
    for (Eigen::Index c = 0; c < nc; ++c) {
      for (Eigen::Index p = 0; p < np; ++p) {
        const double level = complete(c, p) ? world.cell_intensity(c, p)
                                            : world.partial_level * fraction(c, p);
        if (world.noise > 0.0) {
          const double z = gauss(rng);
          log_noise(c, p) = t == 0 ? stationary_sd * z : rho * log_noise(c, p) + sigma * z;
        }
        v(c, p) = world.country_size(c) * world.product_market(p) * level * std::exp(log_noise(c, p));
      }
    }
    values.push_back(std::move(v));
    endowments.push_back(owned);
  }
  return {ExportPanel(std::move(year_list), std::move(countries), std::move(products),
                      std::move(values)),
          std::move(endowments), std::move(acquisitions), std::move(completions)};
}

DenseMatrix<int> oracle_relatedness(const CapabilityWorld& world) {
  const DenseMatrix<int> r = world.product_requirements.cast<int>();
  return r * r.transpose();
}

void write_ground_truth(std::ostream& out, const CapabilityWorld& world,
                        const SyntheticPanel& synthetic) {
  nlohmann::ordered_json doc;
  auto rows = [](const BinaryMatrix& m) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::string bits;
      for (Eigen::Index j = 0; j < m.cols(); ++j) bits.push_back(m(i, j) ? '1' : '0');
      a.push_back(bits);
    }
    return a;
  };
  const auto& countries = synthetic.panel.countries();
  const auto& products = synthetic.panel.products();
  doc["format"] = "exportcast-synth-truth";
  doc["version"] = 1;
  doc["seed"] = world.seed;
  doc["noise"] = world.noise;
  doc["noise_persistence"] = world.noise_persistence;
  doc["acquisition_rate"] = world.acquisition_rate;
  doc["partial_level"] = world.partial_level;
  doc["countries"] = countries;
  doc["products"] = products;
  doc["n_capabilities"] = world.n_capabilities;
  doc["initial_endowments"] = rows(world.country_endowments);
  doc["final_endowments"] = rows(synthetic.endowments.back());
  doc["product_requirements"] = rows(world.product_requirements);
  nlohmann::ordered_json acq = nlohmann::ordered_json::array();
  for (const auto& e : synthetic.acquisitions) {
    acq.push_back({{"country", countries[e.country]}, {"capability", e.capability}, {"year", e.year}});
  }
  doc["capability_acquisitions"] = acq;
  nlohmann::ordered_json act = nlohmann::ordered_json::array();
  for (const auto& e : synthetic.completions) {
    act.push_back({{"country", countries[e.country]}, {"product", products[e.product]}, {"year", e.year}});
  }
  doc["completions"] = act;
  out << doc.dump(1) << '\n';
}

}  // namespace exportcast
