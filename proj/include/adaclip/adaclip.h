//
// Copyright 2026 The AdaClip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Umbrella header.

#ifndef ADACLIP_ADACLIP_H_
#define ADACLIP_ADACLIP_H_

#include "adaclip/config.h"
#include "adaclip/dataset.h"
#include "adaclip/errors.h"
#include "adaclip/federation.h"
#include "adaclip/metrics.h"
#include "adaclip/model.h"
#include "adaclip/param_vector.h"
#include "adaclip/privacy_calibration.h"
#include "adaclip/quantile_tracker.h"
#include "adaclip/rdp_accountant.h"
#include "adaclip/rng.h"
#include "adaclip/sweep.h"

#endif  // ADACLIP_ADACLIP_H_
