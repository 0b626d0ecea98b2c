#pragma once

// Golden reference texts shared by the unit and acceptance suites: a robust
// rule listing, its keyword-extraction reply, frame descriptions, recheck
// verdict outputs, and one multiple-choice reasoning item.

namespace fixtures {

inline constexpr const char* kRobustRules = R"fix(**Rules for Anomaly Human Activities:**
1. Using any non-walking movement such as riding a bicycle or scooter, skateboarding
2. Running or jumping
3. Moving with the usual speed such as very fast or in a hurry
4. Person lying or bending down on the ground
5. Aggressive or unusual movements such as fighting or pushing
6. Loitering around the trash bin
7. Climbing on trees or into manhole/utility access points
8. Tampering with manhole covers
9. Engaging in physical altercation
10. Lingering without a clear purpose near a sensitive area
11. Falling unexpectedly

**Rules for Anomaly Environmental Objects:**
1. Missing, removed, or ajar manhole covers
2. Ground transportation such as vehicles, vans, bicycles.
3. Unattended bags or objects (security threat)
4. Unusual objects (vehicles, large unattended luggage, etc.)
5. Unauthorized posters or signs
6. Damaged manhole cover or trees
7. Abandoned items in a public area
8. Yellow objects (when not commonly seen)
9. Graffiti on building windows or vandalism to a fence
10. Obstructions on pedestrian crossing
11. Fire hydrant spraying water without presence of emergency services
12. Unidentified objects near the tall structure
13. Smoke or fire coming from a utility access point
14. Objects thrown or falling from a height

**Rules for Normal Human Activities:**
1. Walking alone or with another person
2. Standing and using a mobile device
3. Walking on the sidewalk
4. Walking towards or away from a building
5. Entering a building
6. Standing near a trash bin
7. Waiting at traffic lights
8. Walking on pedestrian crossing
9. Sitting on bench or ground

**Rules for Normal Environmental Objects:**
1. Manhole covers on the ground or street
2. Trees along the street or Plants present
3. Trash bin in vicinity or placed beside the street
4. Posters on glass door
5. Static building with glass windows
6. Fence along the water
7. Pedestrian crossing markings visible
8. Standing fire hydrant
9. Static tall structure in the background
10. Utility access points on the ground
)fix";

inline constexpr const char* kKeywordReply =
    R"fix(anomaly_from_rule = ["trolley", "cart", "luggage", "bicycle", "skateboard", "scooter", "vehicles", "vans", "accident", "running", "jumping", "riding", "skateboarding", "scooting", "lying", "falling", "bending", "fighting", "pushing", "loitering", "climbing", "tampering", "lingering"])fix";

inline constexpr const char* kReferenceFrameText =
    "There are four people in the image. Starting from the left, the first person is walking "
    "on the path. The second person is walking on the bridge. The third person is also walking "
    "on the bridge. The fourth person is also walking on the bridge. Other than people, there "
    "are trees, a railing, a path, and a bridge visible in the image.";

inline constexpr const char* kAnomalyFrameText =
    "There are four people in the image. One person is walking, another is also walking, the "
    "third person is riding a bicycle, and the fourth person is walking near the bicycle. "
    "Other than people, there are trees, a pathway, a trash bin, a bicycle, and two manhole "
    "covers visible in the image.";

inline constexpr const char* kNormalFrameText =
    "There are two people in the image. One person appears to be walking, the other seems to "
    "be walking together. Other than people, there are two manhole covers on the ground, a "
    "trash bin, and some trees and plants.";

inline constexpr const char* kAnomalyVerdict =
    R"fix(The third person is riding a bicycle, which matches rule number 1 under Anomaly Human Activities.

The bicycle matches rule number 2 under Anomaly Environmental Objects.

Answer: anomaly.)fix";

inline constexpr const char* kNormalVerdict =
    R"fix(The human activities present are two people walking. The rules for normal human activities include walking alone or with another person. So, the rule matching is:
1. Walking alone or with another person (normal)

The environmental objects present are two manhole covers on the ground, a trash bin, and some trees and plants. So, the rules matching are:
1. Manhole covers on the ground or street (normal)
2. Trees along the street or Plants present (normal)
3. Trash bin in vicinity or placed beside the street (normal)

Answer: normal.)fix";

inline constexpr const char* kChoiceDescription =
    "There are four people in the image. One person is walking with a backpack, another "
    "person is riding a bicycle, a third person is standing and looking at the bicyclist, and "
    "the fourth person is sitting on a bench. Other than people, there are trees, a trash "
    "bin, and two manhole covers visible in the image.";

inline constexpr const char* kChoiceA =
    "Anomaly, since \"climbing on a tree\" matches anomaly human activities \"Climbing on "
    "trees or into manhole/utility access points\".";  // RW

inline constexpr const char* kChoiceB =
    "Normal, since no rules for anomaly human activities or non-human objects match.";  // WW

inline constexpr const char* kChoiceC =
    "Anomaly, since \"riding a bicycle\" matches anomaly human activities \"Using any "
    "non-walking movement such as riding a bicycle or scooter, skateboarding\".";  // RR

inline constexpr const char* kChoiceD =
    "Anomaly, since \"a vehicle parked blocking a pedestrian crossing\" matches anomaly "
    "non-human objects \"Obstructions on pedestrian crossing\".";  // RW

}  // namespace fixtures
