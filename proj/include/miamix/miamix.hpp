#pragma once

#include "miamix/errors.hpp"
#include "miamix/rng.hpp"
#include "miamix/core.hpp"
#include "miamix/generators.hpp"
#include "miamix/ratio_sampling.hpp"
#include "miamix/mask_augmentation.hpp"
#include "miamix/mask_merging.hpp"
#include "miamix/pipeline.hpp"
#include "miamix/config_io.hpp"
#include "miamix/dataset_io.hpp"
#include "miamix/commands.hpp"
